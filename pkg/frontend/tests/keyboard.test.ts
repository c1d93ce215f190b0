import { describe, expect, it } from "vitest";
import { decideKey, KeyModifiers } from "../src/keyboard.js";

const plain: KeyModifiers = { ctrl: false, meta: false, alt: false };

describe("decideKey", () => {
    it("sends printable characters", () => {
        for (const key of ["a", "Z", "3", " ", "?", ".", "!", "ñ"]) {
            expect(decideKey(key, plain)).toEqual({ kind: "send", ch: key });
        }
    });

    it("suppresses backspace and delete with a reason", () => {
        for (const key of ["Backspace", "Delete"]) {
            const d = decideKey(key, plain);
            expect(d.kind).toBe("suppress");
        }
    });

    it("suppresses enter", () => {
        expect(decideKey("Enter", plain).kind).toBe("suppress");
    });

    it("suppresses the paste shortcut on both ctrl and meta", () => {
        const ctrl = decideKey("v", { ctrl: true, meta: false, alt: false });
        const meta = decideKey("V", { ctrl: false, meta: true, alt: false });
        expect(ctrl.kind).toBe("suppress");
        expect(meta.kind).toBe("suppress");
    });

    it("ignores other shortcuts instead of sending the letter", () => {
        expect(decideKey("c", { ctrl: true, meta: false, alt: false })).toEqual({
            kind: "ignore",
        });
        expect(decideKey("r", { ctrl: false, meta: true, alt: false })).toEqual({
            kind: "ignore",
        });
        expect(decideKey("f", { ctrl: false, meta: false, alt: true })).toEqual({
            kind: "ignore",
        });
    });

    it("ignores named keys", () => {
        for (const key of ["Shift", "ArrowLeft", "Tab", "F5", "Escape", "CapsLock"]) {
            expect(decideKey(key, plain)).toEqual({ kind: "ignore" });
        }
    });
});
