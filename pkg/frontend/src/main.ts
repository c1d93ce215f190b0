import { ChatClient, ClientSink } from "./client.js";
import { configFromQuery } from "./protocol.js";
import { RenderedChar } from "./track.js";

// Page wiring. All session logic lives in ChatClient; this file only
// touches the DOM, the WebSocket, and timers.

function el(id: string): HTMLElement {
    const node = document.getElementById(id);
    if (!node) {
        throw new Error("missing #" + id);
    }
    return node;
}

// opacity transition length, must stay under the 100ms slack the display
// contract allows after the fade deadline
const FADE_OUT_MS = 80;

function main(): void {
    const trackEl = el("track");
    const statusEl = el("status");
    const panelEl = el("panel");
    const cueEl = el("cue");
    const advanceEl = el("advance") as HTMLButtonElement;

    let cfg;
    try {
        cfg = configFromQuery(location.search);
    } catch (err) {
        statusEl.textContent =
            (err instanceof Error ? err.message : String(err)) +
            " (open as ?session=NAME&role=tutor|learner[&server=ws://...])";
        return;
    }

    let cueTimer: number | undefined;
    const sink: ClientSink = {
        renderChars(chars: RenderedChar[]): void {
            for (const rc of chars) {
                const span = document.createElement("span");
                span.className = "ch sender-" + rc.sender;
                span.textContent = rc.ch;
                trackEl.appendChild(span);
                const untilFade = Math.max(0, rc.fadeAt - Date.now());
                window.setTimeout(() => {
                    span.classList.add("fading");
                    window.setTimeout(() => span.remove(), FADE_OUT_MS);
                }, untilFade);
            }
        },
        status(text: string): void {
            statusEl.textContent = text;
        },
        panel(html: string): void {
            panelEl.innerHTML = html;
        },
        inputEnabled(enabled: boolean): void {
            document.body.classList.toggle("typing-enabled", enabled);
            advanceEl.disabled = !enabled;
        },
        cue(text: string): void {
            cueEl.textContent = text;
            cueEl.classList.add("visible");
            if (cueTimer !== undefined) {
                window.clearTimeout(cueTimer);
            }
            cueTimer = window.setTimeout(() => cueEl.classList.remove("visible"), 900);
        },
        ended(reason: string): void {
            statusEl.textContent = "session ended (" + reason + ")";
            document.body.classList.add("ended");
        },
    };

    const ws = new WebSocket(cfg.server);
    const client = new ChatClient(cfg, ws, sink);
    // the raw character history stays reachable from the console even
    // after everything has faded from the screen
    (window as unknown as { transcript: RenderedChar[] }).transcript = client.track.transcript;

    ws.onopen = () => client.handleOpen();
    ws.onmessage = (ev) => client.handleMessage(String(ev.data));
    ws.onclose = () => client.handleClose();
    ws.onerror = () => sink.status("connection error, is the server running?");

    if (cfg.role === "tutor") {
        advanceEl.hidden = false;
        advanceEl.addEventListener("click", () => {
            client.requestAdvance();
            advanceEl.blur();
        });
    }

    document.addEventListener("keydown", (ev) => {
        const decision = client.handleKeydown(ev.key, {
            ctrl: ev.ctrlKey,
            meta: ev.metaKey,
            alt: ev.altKey,
        });
        if (decision.kind !== "ignore") {
            ev.preventDefault();
        }
    });
    document.addEventListener("paste", (ev) => {
        ev.preventDefault();
        client.handlePaste();
    });
}

main();
