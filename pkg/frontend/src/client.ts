import { decideKey, KeyDecision, KeyModifiers } from "./keyboard.js";
import {
    advanceMessage,
    ClientConfig,
    Dictionary,
    joinMessage,
    keyMessage,
    ObjectJson,
    parseServerMessage,
    Role,
} from "./protocol.js";
import { renderLearnerPanel, renderTutorPanel } from "./panel.js";
import { RenderedChar, Track } from "./track.js";

// What the client needs from a WebSocket. Injected so the logic can be
// exercised without opening a real connection.
export interface OutboundSocket {
    send(data: string): void;
}

// Everything the client tells the page. main.ts maps these onto DOM
// updates; tests record them.
export interface ClientSink {
    renderChars(chars: RenderedChar[]): void;
    status(text: string): void;
    panel(html: string): void;
    inputEnabled(enabled: boolean): void;
    cue(text: string): void;
    ended(reason: string): void;
}

export type ClientState = "connecting" | "waiting" | "active" | "ended";

const DEFAULT_FADE_MS = 1000;

export class ChatClient {
    readonly config: ClientConfig;
    readonly track: Track;
    state: ClientState = "connecting";
    private socket: OutboundSocket;
    private sink: ClientSink;
    private now: () => number;
    private role: Role;
    private object: ObjectJson | null = null;
    private dictionary: Dictionary | null = null;
    private fadeMs = DEFAULT_FADE_MS;

    constructor(
        config: ClientConfig,
        socket: OutboundSocket,
        sink: ClientSink,
        now: () => number = () => Date.now(),
    ) {
        this.config = config;
        this.role = config.role;
        this.socket = socket;
        this.sink = sink;
        this.now = now;
        this.track = new Track(DEFAULT_FADE_MS);
        sink.status("connecting to " + config.server);
        sink.inputEnabled(false);
    }

    currentFadeMs(): number {
        return this.fadeMs;
    }

    handleOpen(): void {
        this.socket.send(joinMessage(this.config.session, this.role));
        this.sink.status("joining session " + this.config.session);
    }

    handleMessage(data: string): void {
        const msg = parseServerMessage(data);
        if (msg === null) {
            return;
        }
        switch (msg.type) {
            case "joined": {
                this.fadeMs = msg.fade_ms;
                this.track.fadeMs = msg.fade_ms;
                this.object = msg.object;
                if (msg.dictionary) {
                    this.dictionary = msg.dictionary;
                }
                this.redrawPanel();
                if (msg.status === "active") {
                    this.becomeActive();
                } else {
                    this.state = "waiting";
                    this.sink.status("waiting for the other participant");
                }
                break;
            }
            case "key": {
                const released = this.track.ingest(msg, this.now());
                if (released.length > 0) {
                    this.sink.renderChars(released);
                }
                if (this.track.stalled()) {
                    this.sink.status(
                        "catching up, waiting for character " + this.track.expectedSeq(),
                    );
                } else if (this.state === "active") {
                    this.sink.status("session active");
                }
                break;
            }
            case "object": {
                this.object = msg.object;
                this.redrawPanel();
                // the activation broadcast doubles as the "we are live" signal
                // for whoever joined first
                if (this.state === "waiting") {
                    this.becomeActive();
                }
                break;
            }
            case "end": {
                this.state = "ended";
                this.sink.inputEnabled(false);
                this.sink.ended(msg.reason);
                break;
            }
            case "error": {
                this.sink.cue("server rejected that: " + msg.code);
                break;
            }
        }
    }

    handleClose(): void {
        if (this.state !== "ended") {
            this.state = "ended";
            this.sink.inputEnabled(false);
            this.sink.status("disconnected");
        }
    }

    // Returns the decision so the caller knows whether to preventDefault.
    handleKeydown(key: string, mods: KeyModifiers): KeyDecision {
        const decision = decideKey(key, mods);
        if (this.state !== "active") {
            if (decision.kind !== "ignore") {
                this.sink.cue("session is not active yet");
            }
            return decision.kind === "ignore" ? decision : { kind: "suppress", reason: "inactive" };
        }
        if (decision.kind === "send") {
            this.socket.send(keyMessage(decision.ch, this.now()));
        } else if (decision.kind === "suppress") {
            this.sink.cue(decision.reason);
        }
        return decision;
    }

    handlePaste(): void {
        // nothing from the clipboard ever goes out, active or not
        this.sink.cue("paste is disabled, type each character");
    }

    requestAdvance(): void {
        if (this.state === "active") {
            this.socket.send(advanceMessage());
        }
    }

    private becomeActive(): void {
        this.state = "active";
        this.sink.inputEnabled(true);
        this.sink.status("session active");
    }

    private redrawPanel(): void {
        if (this.object === null) {
            return;
        }
        if (this.role === "tutor" && this.dictionary !== null) {
            this.sink.panel(renderTutorPanel(this.object, this.dictionary));
        } else {
            this.sink.panel(renderLearnerPanel(this.object));
        }
    }
}
