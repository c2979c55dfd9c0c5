// Presenter page wiring: webcam background, capture pipelines in, overlay
// out, plus the mapping-table editor.  All state of record lives on the
// server; reloading this page and reconnecting reproduces the overlay
// from the next snapshot.

import {
  DraftRow,
  emptyRow,
  fetchSuggestions,
  MappingTable,
  rowToEntry,
  validateRow,
} from './authoring.js';
import { FrameCapture, HandCapture, SpeechCapture } from './capture.js';
import { SessionSocket } from './net.js';
import { DocumentLike, NodeLike, OverlayRenderer, Viewport } from './overlay.js';
import { SceneUpdate } from './protocol.js';

const params = new URLSearchParams(location.search);
const sessionId = params.get('session') ?? 'demo';
const httpBase = location.origin.startsWith('http') ? location.origin : 'http://127.0.0.1:8787';
const wsUrl = params.get('server') ?? httpBase.replace(/^http/, 'ws') + '/ws';

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing #${id}`);
  return el as T;
};

const banner = $('banner');
const stage = $('stage');
const video = $<HTMLVideoElement>('camera');
const overlayRoot = $('overlay');
const tableBody = $('mapping-rows');
const form = $<HTMLFormElement>('mapping-form');
const suggestBox = $('suggestions');
const errorBox = $('server-errors');

const viewport = (): Viewport => ({ width: stage.clientWidth, height: stage.clientHeight });

const renderer = new OverlayRenderer(
  overlayRoot as unknown as NodeLike,
  document as unknown as DocumentLike,
);
let lastScene: SceneUpdate | null = null;

const socket = new SessionSocket(wsUrl, sessionId, { role: 'presenter' });
const table = new MappingTable();

socket.onStatus = (status) => {
  banner.textContent = status === 'open' ? '' : `connection ${status}...`;
  banner.style.display = status === 'open' ? 'none' : 'block';
};

socket.onScene = (scene) => {
  lastScene = scene;
  renderer.render(scene, viewport());
};

socket.onServerError = (code, detail) => {
  errorBox.textContent = `server: ${code} ${detail}`;
};

socket.onMapping = (op, entry) => {
  table.applyEcho(op, entry);
  redrawTable();
};

window.addEventListener('resize', () => {
  if (lastScene !== null) renderer.render(lastScene, viewport());
});

// -- mapping table editor -------------------------------------------------

function redrawTable(): void {
  tableBody.textContent = '';
  for (const row of table.list()) {
    const tr = document.createElement('tr');
    for (const cell of [
      row.keyword,
      row.kind,
      row.url,
      row.durationMs === null ? '' : String(row.durationMs),
      row.showKeyword ? 'yes' : '',
      row.anchorHint,
    ]) {
      const td = document.createElement('td');
      td.textContent = cell;
      tr.appendChild(td);
    }
    const del = document.createElement('button');
    del.textContent = 'delete';
    del.addEventListener('click', () => socket.sendMappingDelete(row.keyword));
    const td = document.createElement('td');
    td.appendChild(del);
    tr.appendChild(td);
    tableBody.appendChild(tr);
  }
}

function readDraft(): DraftRow {
  const value = (name: string): string =>
    (form.elements.namedItem(name) as HTMLInputElement | HTMLSelectElement).value;
  const duration = value('duration').trim();
  return {
    ...emptyRow(),
    keyword: value('keyword'),
    kind: value('kind'),
    url: value('url'),
    durationMs: duration === '' ? null : Number(duration),
    showKeyword: (form.elements.namedItem('show_keyword') as HTMLInputElement).checked,
    anchorHint: value('anchor_hint') || 'front2d',
  };
}

form.addEventListener('submit', (ev) => {
  ev.preventDefault();
  const row = readDraft();
  const problems = validateRow(row);
  if (problems.length > 0) {
    errorBox.textContent = problems.join('; ');
    return; // invalid rows never reach the wire
  }
  errorBox.textContent = '';
  socket.sendMappingUpsert(rowToEntry(row));
});

$('suggest-btn').addEventListener('click', async () => {
  const keyword = readDraft().keyword;
  suggestBox.textContent = '';
  for (const url of await fetchSuggestions(httpBase, keyword)) {
    const img = document.createElement('img');
    img.src = url;
    img.title = url;
    img.addEventListener('click', () => {
      (form.elements.namedItem('url') as HTMLInputElement).value = url;
    });
    suggestBox.appendChild(img);
  }
});

// -- capture pipelines ----------------------------------------------------

const speech = new SpeechCapture(({ text, isFinal }) => socket.sendTranscript(text, isFinal));
const hands = new HandCapture();
const frames = new FrameCapture(video, (w, h, b64) => socket.sendFrame(w, h, b64));

$('speech-toggle').addEventListener('change', (ev) => {
  if ((ev.target as HTMLInputElement).checked) speech.start();
  else speech.stop();
});

$('marker-toggle').addEventListener('change', (ev) => {
  if ((ev.target as HTMLInputElement).checked) frames.start();
  else frames.stop();
});

let surfaceMode = false;
$('surface-toggle').addEventListener('change', (ev) => {
  surfaceMode = (ev.target as HTMLInputElement).checked;
});

// Click-to-place: normal clicks hint the next spawn position; surface mode
// stands in for world tracking by treating the tap point as (u, v).
stage.addEventListener('click', (ev) => {
  const rect = stage.getBoundingClientRect();
  const x = (ev.clientX - rect.left) / rect.width;
  const y = (ev.clientY - rect.top) / rect.height;
  if (x >= 0 && x <= 1 && y >= 0 && y <= 1) socket.sendPointHint(x, y, surfaceMode);
});

async function startCamera(): Promise<void> {
  if (!navigator.mediaDevices?.getUserMedia) return;
  try {
    const stream = await navigator.mediaDevices.getUserMedia({ video: true, audio: true });
    video.srcObject = stream;
    await video.play();
  } catch {
    banner.textContent = 'camera unavailable; overlay only';
    banner.style.display = 'block';
  }
}

startCamera();
hands.start((frame) => socket.sendHandFrame(frame.side, frame.landmarks));
if (!SpeechCapture.supported()) {
  ($('speech-toggle') as HTMLInputElement).disabled = true;
}
socket.connect();
