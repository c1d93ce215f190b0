// Wire protocol types and parsing. The client speaks newline-less JSON
// text frames over a WebSocket; every message has a "type" field.

export type Role = "tutor" | "learner";

export interface ObjectJson {
    color: string;
    shape: string;
    features?: number[];
}

// dictionary: {color: {red: "sako", ...}, shape: {square: "burchak", ...}}
export type Dictionary = { color: Record<string, string>; shape: Record<string, string> };

export interface JoinedMsg {
    type: "joined";
    role: Role;
    fade_ms: number;
    status: string;
    object: ObjectJson;
    dictionary?: Dictionary;
}

export interface KeyMsg {
    type: "key";
    seq: number;
    sender: Role;
    ch: string;
    server_ts: number;
}

export interface ObjectMsg {
    type: "object";
    index: number;
    object: ObjectJson;
}

export interface EndMsg {
    type: "end";
    reason: string;
}

export interface ErrorMsg {
    type: "error";
    code: string;
    message?: string;
}

export type ServerMsg = JoinedMsg | KeyMsg | ObjectMsg | EndMsg | ErrorMsg;

const SERVER_TYPES = new Set(["joined", "key", "object", "end", "error"]);

export function parseServerMessage(data: string): ServerMsg | null {
    let raw: unknown;
    try {
        raw = JSON.parse(data);
    } catch {
        return null;
    }
    if (typeof raw !== "object" || raw === null) return null;
    const msg = raw as { type?: unknown };
    if (typeof msg.type !== "string" || !SERVER_TYPES.has(msg.type)) return null;
    return raw as ServerMsg;
}

export function joinMessage(session: string, role: Role): string {
    return JSON.stringify({ type: "join", session, role });
}

// Exactly one character per outbound message, no exceptions.
export function keyMessage(ch: string, clientTs: number): string {
    if (ch.length !== 1) {
        throw new Error("key message must carry exactly one character, got " + JSON.stringify(ch));
    }
    return JSON.stringify({ type: "key", ch, client_ts: clientTs });
}

export function advanceMessage(): string {
    return JSON.stringify({ type: "advance" });
}

export interface ClientConfig {
    server: string;
    session: string;
    role: Role;
}

// Configuration comes from URL query parameters: ?server=&session=&role=
export function configFromQuery(query: string): ClientConfig {
    const params = new URLSearchParams(query);
    const role = params.get("role");
    if (role !== "tutor" && role !== "learner") {
        throw new Error("role must be tutor or learner");
    }
    const session = params.get("session");
    if (!session) {
        throw new Error("missing session parameter");
    }
    return {
        server: params.get("server") || "ws://127.0.0.1:8765",
        session,
        role,
    };
}
