// Capture pipelines: speech, hand landmarks, and downscaled video frames.
// Each is an independent producer feeding the session socket; all browser
// APIs are feature-checked so this module loads anywhere.

export const FRAME_MAX_WIDTH = 320;
export const FRAME_MIN_INTERVAL_MS = 100; // caps marker frames at 10 fps

/** Shrink to at most maxWidth, keeping aspect; never upscale. */
export function scaleToFit(
  width: number,
  height: number,
  maxWidth: number = FRAME_MAX_WIDTH,
): { width: number; height: number } {
  if (width <= maxWidth) return { width, height };
  const factor = maxWidth / width;
  return { width: maxWidth, height: Math.max(1, Math.round(height * factor)) };
}

/** Drop the alpha channel and base64 the raw RGB bytes (row-major). */
export function rgbaToRgbBase64(
  rgba: Uint8ClampedArray | Uint8Array,
  width: number,
  height: number,
): string {
  const pixels = width * height;
  if (rgba.length !== pixels * 4) {
    throw new Error(`expected ${pixels * 4} rgba bytes, got ${rgba.length}`);
  }
  let binary = '';
  for (let i = 0; i < pixels; i++) {
    binary += String.fromCharCode(rgba[i * 4], rgba[i * 4 + 1], rgba[i * 4 + 2]);
  }
  return btoa(binary);
}

export interface TranscriptChunk {
  text: string;
  isFinal: boolean;
}

/**
 * Browser speech recognition -> transcript chunks.  Interims are forwarded
 * too (the server ignores them but traces keep the full recognizer story).
 */
export class SpeechCapture {
  private recognition: any = null;
  private onChunk: (chunk: TranscriptChunk) => void;

  constructor(onChunk: (chunk: TranscriptChunk) => void) {
    this.onChunk = onChunk;
  }

  static supported(): boolean {
    const w = globalThis as any;
    return Boolean(w.SpeechRecognition || w.webkitSpeechRecognition);
  }

  start(): void {
    const w = globalThis as any;
    const Recognition = w.SpeechRecognition || w.webkitSpeechRecognition;
    if (!Recognition) return;
    this.recognition = new Recognition();
    this.recognition.continuous = true;
    this.recognition.interimResults = true;
    this.recognition.onresult = (event: any) => {
      for (let i = event.resultIndex; i < event.results.length; i++) {
        const result = event.results[i];
        this.onChunk({ text: result[0].transcript, isFinal: Boolean(result.isFinal) });
      }
    };
    this.recognition.onend = () => this.recognition?.start(); // keep listening
    this.recognition.start();
  }

  stop(): void {
    if (this.recognition) {
      this.recognition.onend = null;
      this.recognition.stop();
      this.recognition = null;
    }
  }
}

export interface HandFrame {
  side: 'left' | 'right';
  landmarks: [number, number, number][];
}

export type HandFrameSink = (frame: HandFrame) => void;

/**
 * Adapter seam for an in-browser hand-landmark model.  The page registers
 * whatever model it loads via `attach`; without one this is inert, which
 * keeps the rest of the app model-free.
 */
export class HandCapture {
  private detach: (() => void) | null = null;

  start(sink: HandFrameSink): void {
    const w = globalThis as any;
    if (typeof w.__talkoverlayHandSource === 'function') {
      this.detach = w.__talkoverlayHandSource(sink);
    }
  }

  stop(): void {
    this.detach?.();
    this.detach = null;
  }
}

/** Downscaled RGB frames from a video element, rate-limited for the wire. */
export class FrameCapture {
  private video: HTMLVideoElement;
  private onFrame: (width: number, height: number, pixelsB64: string) => void;
  private timer: ReturnType<typeof setInterval> | null = null;
  private canvas: HTMLCanvasElement | null = null;

  constructor(
    video: HTMLVideoElement,
    onFrame: (width: number, height: number, pixelsB64: string) => void,
  ) {
    this.video = video;
    this.onFrame = onFrame;
  }

  start(intervalMs: number = FRAME_MIN_INTERVAL_MS): void {
    this.stop();
    this.timer = setInterval(() => this.grab(), Math.max(intervalMs, FRAME_MIN_INTERVAL_MS));
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private grab(): void {
    const vw = this.video.videoWidth;
    const vh = this.video.videoHeight;
    if (vw === 0 || vh === 0) return; // camera not ready yet
    const { width, height } = scaleToFit(vw, vh);
    if (this.canvas === null) this.canvas = document.createElement('canvas');
    this.canvas.width = width;
    this.canvas.height = height;
    const ctx = this.canvas.getContext('2d', { willReadFrequently: true });
    if (ctx === null) return;
    ctx.drawImage(this.video, 0, 0, width, height);
    const rgba = ctx.getImageData(0, 0, width, height).data;
    this.onFrame(width, height, rgbaToRgbBase64(rgba, width, height));
  }
}
