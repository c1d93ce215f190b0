import { KeyMsg } from "./protocol.js";

// A character the UI should draw, plus the instant it must be gone by.
export interface RenderedChar {
    ch: string;
    sender: string;
    seq: number;
    renderedAt: number;
    fadeAt: number;
}

// Shared character track. Broadcasts carry contiguous seq numbers per
// session; delivery order is almost always arrival order, but the display
// contract is ordering by seq, so anything early is buffered until the
// hole before it fills.
export class Track {
    // set once the server announces the session's fade window
    fadeMs: number;
    private nextSeq = 1;
    private pending = new Map<number, KeyMsg>();
    // Full history, kept off-screen. Characters vanish from the display
    // after fadeMs but the session transcript stays available for
    // inspection until the page goes away.
    readonly transcript: RenderedChar[] = [];

    constructor(fadeMs: number) {
        this.fadeMs = fadeMs;
    }

    // Returns the chars that became displayable because of this message,
    // in seq order. Usually one; more when this message plugs a gap.
    ingest(msg: KeyMsg, now: number): RenderedChar[] {
        if (msg.seq < this.nextSeq || this.pending.has(msg.seq)) {
            return [];
        }
        this.pending.set(msg.seq, msg);
        const released: RenderedChar[] = [];
        while (this.pending.has(this.nextSeq)) {
            const m = this.pending.get(this.nextSeq)!;
            this.pending.delete(this.nextSeq);
            const rc: RenderedChar = {
                ch: m.ch,
                sender: m.sender,
                seq: m.seq,
                renderedAt: now,
                fadeAt: now + this.fadeMs,
            };
            this.transcript.push(rc);
            released.push(rc);
            this.nextSeq += 1;
        }
        return released;
    }

    // True when something arrived out of order and the hole before it has
    // not filled yet.
    stalled(): boolean {
        return this.pending.size > 0;
    }

    expectedSeq(): number {
        return this.nextSeq;
    }

    visible(now: number): RenderedChar[] {
        return this.transcript.filter((rc) => rc.fadeAt > now);
    }

    expired(now: number): RenderedChar[] {
        return this.transcript.filter((rc) => rc.fadeAt <= now);
    }
}
