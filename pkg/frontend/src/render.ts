/** Pure view-model construction: analysis -> renderable tiles with colors,
 * badges, and error states. DOM creation happens in main.ts only. */

import { qualityClass, typeColor } from "./legend.js";
import { computeTiles, type Tile } from "./tiling.js";
import type { UiAnalysis } from "./types.js";

export interface TileView {
  text: string;
  kind: "labeled" | "unclassified" | "filler" | "unknown-label";
  color: string | null; // highlight color for labeled tiles
  typeLabel: string | null;
  badge: { text: string; cssClass: string } | null;
  title: string; // tooltip
}

export function tileViews(analysis: UiAnalysis): { tiles: Tile[]; views: TileView[] } {
  const tiles = computeTiles(analysis.text, analysis.segments);
  const views = tiles.map((tile): TileView => {
    if (tile.segment === null) {
      return { text: tile.text, kind: "filler", color: null, typeLabel: null, badge: null, title: "" };
    }
    const segment = tile.segment;
    if (segment.discarded || (segment.type === null && segment.quality === null)) {
      return {
        text: tile.text,
        kind: "unclassified",
        color: null,
        typeLabel: null,
        badge: null,
        title: "the model could not classify this segment",
      };
    }
    const color = segment.type !== null ? typeColor(segment.type) : null;
    const badgeClass = segment.quality !== null ? qualityClass(segment.quality) : null;
    const unknownType = segment.type !== null && color === undefined;
    const unknownQuality = segment.quality !== null && badgeClass === undefined;
    if (unknownType || unknownQuality) {
      // A label outside the closed legends is a contract violation; surface
      // it loudly instead of guessing a style.
      return {
        text: tile.text,
        kind: "unknown-label",
        color: null,
        typeLabel: segment.type,
        badge: null,
        title: `unknown label from service: ${unknownType ? segment.type : segment.quality}`,
      };
    }
    return {
      text: tile.text,
      kind: "labeled",
      color: color ?? null,
      typeLabel: segment.type,
      badge:
        segment.quality !== null
          ? { text: segment.quality, cssClass: badgeClass as string }
          : null,
      title: `${segment.type ?? "?"}${segment.quality ? `, ${segment.quality}` : ""}`,
    };
  });
  return { tiles, views };
}
