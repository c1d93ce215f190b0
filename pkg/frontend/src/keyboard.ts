// Keystroke policy. Participants type character by character; nothing can
// be deleted once sent, so deletion keys are swallowed locally (with a
// visible cue) and never reach the wire. Paste is handled the same way by
// the paste event, plus the ctrl/cmd+v shortcut here.

export type KeyDecision =
    | { kind: "send"; ch: string }
    | { kind: "suppress"; reason: string }
    | { kind: "ignore" };

export interface KeyModifiers {
    ctrl: boolean;
    meta: boolean;
    alt: boolean;
}

export function decideKey(key: string, mods: KeyModifiers): KeyDecision {
    if ((mods.ctrl || mods.meta) && (key === "v" || key === "V")) {
        return { kind: "suppress", reason: "paste is disabled, type each character" };
    }
    if (mods.ctrl || mods.meta || mods.alt) {
        return { kind: "ignore" };
    }
    if (key === "Backspace" || key === "Delete") {
        return { kind: "suppress", reason: "deletion is disabled" };
    }
    if (key === "Enter") {
        return { kind: "suppress", reason: "everything stays on one line" };
    }
    if (key.length !== 1) {
        // named keys: Shift, ArrowLeft, F5, Tab, ...
        return { kind: "ignore" };
    }
    if (key < " " || key === "\x7f") {
        return { kind: "ignore" };
    }
    return { kind: "send", ch: key };
}
