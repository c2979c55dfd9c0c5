// Session socket: seq bookkeeping, reconnect, and scene-stream resync.
//
// The server numbers SceneUpdates gap-free per session; the hello reply
// repeats the current number without bumping it.  So the rule here is:
// adopt the first update after a hello unconditionally, then accept only
// seq+1.  A gap means we missed a broadcast -> re-hello for a snapshot.
// Anything at or below the current seq is a stale duplicate and ignored.

import {
  encodeFrame,
  encodeHandFrame,
  encodeHello,
  encodeMappingDelete,
  encodeMappingUpsert,
  encodePointHint,
  encodeTranscript,
  parseServerMessage,
  ProtocolError,
  SceneUpdate,
} from './protocol.js';

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionStatus = 'connecting' | 'open' | 'closed';

export interface SessionSocketOptions {
  role?: 'presenter' | 'viewer';
  factory?: SocketFactory;
  reconnectDelayMs?: number;
  timers?: { setTimeout: typeof setTimeout; clearTimeout: typeof clearTimeout };
}

const defaultFactory: SocketFactory = (url) =>
  new WebSocket(url) as unknown as SocketLike;

export class SessionSocket {
  readonly url: string;
  readonly sessionId: string;
  readonly role: 'presenter' | 'viewer';

  onScene: ((scene: SceneUpdate) => void) | null = null;
  onMapping: ((op: string, entry: Record<string, unknown>) => void) | null = null;
  onServerError: ((code: string, detail: string) => void) | null = null;
  onStatus: ((status: ConnectionStatus) => void) | null = null;

  private factory: SocketFactory;
  private reconnectDelayMs: number;
  private timers: { setTimeout: typeof setTimeout; clearTimeout: typeof clearTimeout };
  private socket: SocketLike | null = null;
  private nextSeq = 1; // inbound messages must be strictly increasing per session
  private sceneSeq = -1; // highest contiguous SceneUpdate applied
  private awaitingSnapshot = false;
  private closedByUser = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(url: string, sessionId: string, opts: SessionSocketOptions = {}) {
    this.url = url;
    this.sessionId = sessionId;
    this.role = opts.role ?? 'presenter';
    this.factory = opts.factory ?? defaultFactory;
    this.reconnectDelayMs = opts.reconnectDelayMs ?? 1000;
    this.timers = opts.timers ?? { setTimeout, clearTimeout };
  }

  get lastSceneSeq(): number {
    return this.sceneSeq;
  }

  connect(): void {
    this.closedByUser = false;
    this.onStatus?.('connecting');
    const ws = this.factory(this.url);
    this.socket = ws;
    ws.onopen = () => {
      this.onStatus?.('open');
      this.hello();
    };
    ws.onmessage = (ev) => this.handleRaw(String(ev.data));
    ws.onclose = () => this.handleClose(ws);
    ws.onerror = () => {
      // the close handler does the work; errors always precede a close
    };
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) {
      this.timers.clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.socket = null;
    this.onStatus?.('closed');
  }

  /** Ask for a fresh snapshot; also the resync path after a seq gap. */
  hello(): void {
    this.awaitingSnapshot = true;
    this.socket?.send(encodeHello(this.sessionId, this.role));
  }

  sendTranscript(text: string, isFinal: boolean): void {
    this.send(encodeTranscript(this.sessionId, this.takeSeq(), text, isFinal));
  }

  sendHandFrame(side: 'left' | 'right', landmarks: [number, number, number][]): void {
    this.send(encodeHandFrame(this.sessionId, this.takeSeq(), side, landmarks));
  }

  sendFrame(width: number, height: number, pixelsB64: string): void {
    this.send(encodeFrame(this.sessionId, this.takeSeq(), width, height, pixelsB64));
  }

  sendMappingUpsert(entry: Record<string, unknown>): void {
    this.send(encodeMappingUpsert(this.sessionId, this.takeSeq(), entry));
  }

  sendMappingDelete(keyword: string): void {
    this.send(encodeMappingDelete(this.sessionId, this.takeSeq(), keyword));
  }

  sendPointHint(x: number, y: number, surface = false): void {
    this.send(encodePointHint(this.sessionId, this.takeSeq(), x, y, surface));
  }

  private takeSeq(): number {
    return this.nextSeq++;
  }

  private send(frame: string): void {
    this.socket?.send(frame);
  }

  private handleRaw(raw: string): void {
    let msg;
    try {
      msg = parseServerMessage(raw);
    } catch (err) {
      if (err instanceof ProtocolError) return; // never let a bad frame kill the client
      throw err;
    }
    switch (msg.kind) {
      case 'scene':
        this.handleScene(msg.scene);
        break;
      case 'mapping':
        this.onMapping?.(msg.op, msg.entry);
        break;
      case 'error':
        this.onServerError?.(msg.code, msg.detail);
        break;
      case 'gesture':
        break; // debug stream; rendering ignores it
    }
  }

  private handleScene(scene: SceneUpdate): void {
    if (this.awaitingSnapshot) {
      this.awaitingSnapshot = false;
      this.sceneSeq = scene.seq;
      this.onScene?.(scene);
      return;
    }
    if (scene.seq <= this.sceneSeq) return; // duplicate or reordered
    if (scene.seq === this.sceneSeq + 1) {
      this.sceneSeq = scene.seq;
      this.onScene?.(scene);
      return;
    }
    this.hello(); // gap: recover with a full snapshot
  }

  private handleClose(ws: SocketLike): void {
    if (this.socket !== ws) return; // superseded by a newer connect()
    this.socket = null;
    this.onStatus?.('closed');
    if (this.closedByUser) return;
    this.reconnectTimer = this.timers.setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, this.reconnectDelayMs);
  }
}
