import { Dictionary, ObjectJson } from "./protocol.js";

// Task panel markup. Everything is drawn client-side from (color, shape)
// pairs as inline SVG; there are no image assets to fetch.

const FILLS: Record<string, string> = {
    red: "#d14034",
    green: "#2e9e44",
    blue: "#2b6cd4",
};

export const COLOR_ORDER = ["red", "green", "blue"];
export const SHAPE_ORDER = ["square", "circle", "triangle"];

function escapeHtml(s: string): string {
    return s
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

export function shapeSvg(color: string, shape: string, size: number): string {
    const fill = FILLS[color] ?? "#888";
    const pad = Math.round(size * 0.12);
    const inner = size - 2 * pad;
    let body: string;
    if (shape === "circle") {
        const r = inner / 2;
        body = `<circle cx="${size / 2}" cy="${size / 2}" r="${r}" fill="${fill}"/>`;
    } else if (shape === "triangle") {
        const pts = `${size / 2},${pad} ${size - pad},${size - pad} ${pad},${size - pad}`;
        body = `<polygon points="${pts}" fill="${fill}"/>`;
    } else {
        body = `<rect x="${pad}" y="${pad}" width="${inner}" height="${inner}" fill="${fill}"/>`;
    }
    return (
        `<svg class="glyph glyph-${escapeHtml(shape)}" width="${size}" height="${size}"` +
        ` viewBox="0 0 ${size} ${size}" role="img"` +
        ` aria-label="${escapeHtml(color)} ${escapeHtml(shape)}">${body}</svg>`
    );
}

export function renderObject(obj: ObjectJson): string {
    return (
        `<div class="current-object" data-color="${escapeHtml(obj.color)}"` +
        ` data-shape="${escapeHtml(obj.shape)}">` +
        shapeSvg(obj.color, obj.shape, 96) +
        `</div>`
    );
}

// 3x3 grid, one cell per color/shape pair, each labelled with the two
// invented words the tutor is supposed to teach.
export function renderDictionaryGrid(dict: Dictionary): string {
    const cells: string[] = [];
    for (const shape of SHAPE_ORDER) {
        for (const color of COLOR_ORDER) {
            const colorWord = dict.color[color] ?? "?";
            const shapeWord = dict.shape[shape] ?? "?";
            cells.push(
                `<div class="dict-cell" data-color="${escapeHtml(color)}"` +
                    ` data-shape="${escapeHtml(shape)}">` +
                    shapeSvg(color, shape, 40) +
                    `<span class="dict-words">${escapeHtml(colorWord)} ${escapeHtml(shapeWord)}</span>` +
                    `</div>`,
            );
        }
    }
    return `<div class="dict-grid">${cells.join("")}</div>`;
}

export function renderTutorPanel(obj: ObjectJson, dict: Dictionary): string {
    return (
        `<div class="panel-head">current object</div>` +
        renderObject(obj) +
        `<div class="panel-head">dictionary</div>` +
        renderDictionaryGrid(dict)
    );
}

export function renderLearnerPanel(obj: ObjectJson): string {
    return `<div class="panel-head">current object</div>` + renderObject(obj);
}
