// Wire protocol shared with the overlay server: one JSON object per
// websocket text frame, always the same envelope.

export interface Envelope {
  type: string;
  session_id: string;
  seq: number;
  payload: Record<string, unknown>;
}

export type Rgb = [number, number, number];

export interface Style {
  text_rgb: Rgb;
  bg_rgb: Rgb;
  alpha: number;
}

export type Anchor =
  | { type: 'screen2d'; x: number; y: number }
  | { type: 'hand'; side: string }
  | { type: 'marker'; name: string }
  | { type: 'surface'; u: number; v: number };

export type ElementKind =
  | 'keyword_text'
  | 'label'
  | 'list'
  | 'profile'
  | 'image'
  | 'icon'
  | 'video'
  | 'screen';

export interface SceneElement {
  id: number;
  kind: ElementKind;
  content: string;
  anchor: Anchor;
  x: number;
  y: number;
  scale: number;
  rotation_deg: number;
  created_ms: number;
  expires_ms: number;
  show_keyword: boolean;
  style: Style;
  trigger: string;
  grabbed: boolean;
}

export interface SceneUpdate {
  seq: number;
  t_ms: number;
  elements: SceneElement[];
}

export interface MappingEntry {
  keyword: string;
  kind: string;
  url: string;
  duration_ms: number | null;
  show_keyword: boolean;
  anchor_hint: string;
}

export type ServerMessage =
  | { kind: 'scene'; scene: SceneUpdate }
  | { kind: 'mapping'; seq: number; op: string; entry: Record<string, unknown> }
  | { kind: 'gesture'; seq: number; event: Record<string, unknown> }
  | { kind: 'error'; seq: number; code: string; detail: string };

export class ProtocolError extends Error {}

const asObject = (value: unknown, what: string): Record<string, unknown> => {
  if (typeof value !== 'object' || value === null || Array.isArray(value)) {
    throw new ProtocolError(`${what} must be an object`);
  }
  return value as Record<string, unknown>;
};

/** Decode one server frame. Throws ProtocolError on anything unexpected. */
export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new ProtocolError('frame is not JSON');
  }
  const msg = asObject(data, 'message');
  const { type, seq, payload } = msg;
  if (typeof type !== 'string') throw new ProtocolError("missing 'type'");
  if (typeof seq !== 'number') throw new ProtocolError("missing 'seq'");
  const body = asObject(payload ?? {}, 'payload');

  switch (type) {
    case 'SceneUpdate': {
      const elements = body.elements;
      if (!Array.isArray(elements)) throw new ProtocolError('SceneUpdate without elements');
      return {
        kind: 'scene',
        scene: { seq, t_ms: Number(body.t_ms ?? 0), elements: elements as SceneElement[] },
      };
    }
    case 'MappingUpdate':
      return {
        kind: 'mapping',
        seq,
        op: String(body.op ?? ''),
        entry: asObject(body.entry ?? {}, 'entry'),
      };
    case 'GestureDebug':
      return { kind: 'gesture', seq, event: body };
    case 'Error':
      return { kind: 'error', seq, code: String(body.code ?? ''), detail: String(body.detail ?? '') };
    default:
      throw new ProtocolError(`unknown server message type ${type}`);
  }
}

const envelope = (
  type: string,
  sessionId: string,
  seq: number,
  payload: Record<string, unknown>,
): string => JSON.stringify({ type, session_id: sessionId, seq, payload });

// Client -> server encoders. seq discipline lives in net.ts; these are pure.

export const encodeHello = (sessionId: string, role: 'presenter' | 'viewer'): string =>
  envelope('ClientHello', sessionId, 0, { role });

export const encodeTranscript = (
  sessionId: string,
  seq: number,
  text: string,
  isFinal: boolean,
): string => envelope('TranscriptMsg', sessionId, seq, { text, is_final: isFinal });

export const encodeHandFrame = (
  sessionId: string,
  seq: number,
  side: 'left' | 'right',
  landmarks: [number, number, number][],
): string => envelope('HandFrameMsg', sessionId, seq, { side, landmarks });

export const encodeFrame = (
  sessionId: string,
  seq: number,
  width: number,
  height: number,
  pixelsB64: string,
): string => envelope('FrameMsg', sessionId, seq, { width, height, pixels_b64: pixelsB64 });

export const encodeMappingUpsert = (
  sessionId: string,
  seq: number,
  entry: Record<string, unknown>,
): string => envelope('MappingUpdate', sessionId, seq, { op: 'upsert', entry });

export const encodeMappingDelete = (sessionId: string, seq: number, keyword: string): string =>
  envelope('MappingUpdate', sessionId, seq, { op: 'delete', entry: { keyword } });

export const encodePointHint = (
  sessionId: string,
  seq: number,
  x: number,
  y: number,
  surface = false,
): string => envelope('PointHint', sessionId, seq, { x, y, surface });
