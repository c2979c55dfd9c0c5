// Overlay rendering: normalized scene coordinates -> pixels over the video.
//
// The server owns all state; this module just mirrors the latest
// SceneUpdate into positioned nodes.  Layout math is pure so it can be
// tested without a browser; the renderer takes a minimal document shape
// for the same reason.

import { Rgb, SceneElement, SceneUpdate } from './protocol.js';

export interface Viewport {
  width: number;
  height: number;
}

export interface Placement {
  leftPx: number;
  topPx: number;
  scale: number;
  rotationDeg: number;
  alpha: number;
}

/** Map one element to pixel space. Positions are element centers. */
export const placeElement = (el: SceneElement, vp: Viewport): Placement => ({
  leftPx: el.x * vp.width,
  topPx: el.y * vp.height,
  scale: el.scale,
  rotationDeg: el.rotation_deg,
  alpha: el.style.alpha,
});

export const cssRgb = (c: Rgb): string => `rgb(${c[0]},${c[1]},${c[2]})`;

export const cssTransform = (p: Placement): string =>
  `translate(-50%, -50%) scale(${p.scale}) rotate(${p.rotationDeg}deg)`;

// A structural slice of the DOM, so tests can pass a stub document and
// main.ts can pass the real one.

export interface NodeLike {
  className: string;
  textContent: string | null;
  style: Record<string, string>;
  appendChild(child: NodeLike): unknown;
  removeChild(child: NodeLike): unknown;
  setAttribute(name: string, value: string): void;
}

export interface DocumentLike {
  createElement(tag: string): NodeLike;
}

const TAG_FOR_KIND: Record<string, string> = {
  image: 'img',
  icon: 'img',
  video: 'video',
  screen: 'iframe',
};

const isMedia = (kind: string): boolean => kind in TAG_FOR_KIND;

export class OverlayRenderer {
  private root: NodeLike;
  private doc: DocumentLike;
  private nodes = new Map<number, { node: NodeLike; kind: string }>();

  constructor(root: NodeLike, doc: DocumentLike) {
    this.root = root;
    this.doc = doc;
  }

  /** Reconcile the DOM against one authoritative update. */
  render(scene: SceneUpdate, vp: Viewport): void {
    const live = new Set<number>();
    for (const el of scene.elements) {
      live.add(el.id);
      const existing = this.nodes.get(el.id);
      let node: NodeLike;
      if (existing === undefined || existing.kind !== el.kind) {
        if (existing !== undefined) this.root.removeChild(existing.node);
        node = this.createNode(el);
        this.nodes.set(el.id, { node, kind: el.kind });
        this.root.appendChild(node);
      } else {
        node = existing.node;
      }
      this.updateNode(node, el, vp);
    }
    for (const [id, entry] of [...this.nodes]) {
      if (!live.has(id)) {
        this.root.removeChild(entry.node);
        this.nodes.delete(id);
      }
    }
  }

  private createNode(el: SceneElement): NodeLike {
    const node = this.doc.createElement(TAG_FOR_KIND[el.kind] ?? 'div');
    node.className = `overlay-el overlay-${el.kind}`;
    if (el.kind === 'video') {
      // plays silently on arrival; sound would talk over the presenter
      node.setAttribute('muted', '');
      node.setAttribute('autoplay', '');
      node.setAttribute('loop', '');
      node.setAttribute('playsinline', '');
    }
    return node;
  }

  private updateNode(node: NodeLike, el: SceneElement, vp: Viewport): void {
    const p = placeElement(el, vp);
    node.style.position = 'absolute';
    node.style.left = `${p.leftPx}px`;
    node.style.top = `${p.topPx}px`;
    node.style.transform = cssTransform(p);
    node.style.opacity = String(p.alpha);
    if (isMedia(el.kind)) {
      node.setAttribute('src', el.content);
    } else {
      node.textContent = el.content;
      node.style.whiteSpace = 'pre-line'; // list items arrive newline-joined
      node.style.color = cssRgb(el.style.text_rgb);
      node.style.background = cssRgb(el.style.bg_rgb);
    }
    node.style.outline = el.grabbed ? '2px solid #fff' : '';
  }
}
