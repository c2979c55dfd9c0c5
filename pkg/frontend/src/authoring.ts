// Mapping-table authoring: a spreadsheet-like editor whose committed rows
// become MappingUpdate messages.  Validation mirrors the server so bad
// rows never leave the page.

import { MappingEntry } from './protocol.js';

export const ENTRY_KINDS = ['image', 'icon', 'video', 'screen'] as const;

export interface DraftRow {
  keyword: string;
  kind: string;
  url: string;
  durationMs: number | null;
  showKeyword: boolean;
  anchorHint: string;
}

export const emptyRow = (): DraftRow => ({
  keyword: '',
  kind: 'image',
  url: '',
  durationMs: null,
  showKeyword: false,
  anchorHint: 'front2d',
});

export const validAnchorHint = (hint: string): boolean => {
  if (hint === 'front2d' || hint === 'surface') return true;
  if (hint === 'hand:left' || hint === 'hand:right') return true;
  return hint.startsWith('marker:') && hint.length > 'marker:'.length;
};

const validUrl = (url: string): boolean => {
  try {
    const parsed = new URL(url);
    return parsed.protocol === 'http:' || parsed.protocol === 'https:';
  } catch {
    return false;
  }
};

/** Problems that would make the server reject the row; [] means commit-ready. */
export function validateRow(row: DraftRow): string[] {
  const problems: string[] = [];
  if (row.keyword.trim() === '') problems.push('keyword is required');
  if (!(ENTRY_KINDS as readonly string[]).includes(row.kind)) {
    problems.push(`kind must be one of ${ENTRY_KINDS.join(', ')}`);
  }
  if (!validUrl(row.url)) problems.push('url must be http(s)');
  if (row.durationMs !== null && (!Number.isInteger(row.durationMs) || row.durationMs <= 0)) {
    problems.push('duration must be a positive integer or blank');
  }
  if (!validAnchorHint(row.anchorHint)) problems.push('bad anchor hint');
  return problems;
}

/** Wire form of a committed row. */
export const rowToEntry = (row: DraftRow): Record<string, unknown> => ({
  keyword: row.keyword.trim(),
  kind: row.kind,
  url: row.url,
  duration_ms: row.durationMs,
  show_keyword: row.showKeyword,
  anchor_hint: row.anchorHint,
});

export const entryToRow = (entry: MappingEntry): DraftRow => ({
  keyword: entry.keyword,
  kind: entry.kind,
  url: entry.url,
  durationMs: entry.duration_ms,
  showKeyword: entry.show_keyword,
  anchorHint: entry.anchor_hint,
});

/**
 * Saved rows, keyed by normalized keyword.  Only server echoes mutate it,
 * so the table always shows what the server actually has.
 */
export class MappingTable {
  private rows = new Map<string, DraftRow>();

  applyEcho(op: string, entry: Record<string, unknown>): void {
    const keyword = String(entry.keyword ?? '');
    if (keyword === '') return;
    if (op === 'delete') {
      this.rows.delete(keyword);
    } else if (op === 'upsert') {
      this.rows.set(keyword, entryToRow(entry as unknown as MappingEntry));
    }
  }

  get(keyword: string): DraftRow | undefined {
    return this.rows.get(keyword);
  }

  list(): DraftRow[] {
    return [...this.rows.values()].sort((a, b) => a.keyword.localeCompare(b.keyword));
  }
}

/** Candidate visual URLs for a keyword, from the server's suggestion route. */
export async function fetchSuggestions(
  baseUrl: string,
  keyword: string,
  fetchImpl: typeof fetch = fetch,
): Promise<string[]> {
  const resp = await fetchImpl(`${baseUrl}/suggest?keyword=${encodeURIComponent(keyword)}`);
  if (!resp.ok) return [];
  const body = (await resp.json()) as { urls?: unknown };
  return Array.isArray(body.urls) ? body.urls.map(String) : [];
}
