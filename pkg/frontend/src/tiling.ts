/** Turn API segments into highlight tiles that exactly cover the essay text.
 *
 * The service guarantees tiling ranges, but the renderer must never trust
 * that: ranges are clamped, overlaps clipped, and gaps filled with plain
 * (unhighlighted) tiles, so the union of rendered tiles always equals the
 * displayed text, without overlaps, in document order.
 */

import type { UiSegment } from "./types.js";

export interface Tile {
  start: number;
  end: number;
  text: string;
  segment: UiSegment | null; // null = filler over unannotated text
}

export function computeTiles(text: string, segments: readonly UiSegment[]): Tile[] {
  const length = text.length;
  const ordered = [...segments].sort((a, b) => a.start - b.start || a.end - b.end);
  const tiles: Tile[] = [];
  let cursor = 0;
  for (const segment of ordered) {
    const start = Math.max(cursor, Math.min(Math.max(segment.start, 0), length));
    const end = Math.min(Math.max(segment.end, start), length);
    if (end <= start) continue; // clipped away or empty
    if (start > cursor) {
      tiles.push({ start: cursor, end: start, text: text.slice(cursor, start), segment: null });
    }
    tiles.push({ start, end, text: text.slice(start, end), segment });
    cursor = end;
  }
  if (cursor < length) {
    tiles.push({ start: cursor, end: length, text: text.slice(cursor), segment: null });
  }
  return tiles;
}

/** True iff tiles cover [0, text.length) exactly, in order, without overlap. */
export function tilesAreExact(text: string, tiles: readonly Tile[]): boolean {
  let cursor = 0;
  for (const tile of tiles) {
    if (tile.start !== cursor || tile.end <= tile.start) return false;
    if (tile.text !== text.slice(tile.start, tile.end)) return false;
    cursor = tile.end;
  }
  return cursor === text.length;
}
