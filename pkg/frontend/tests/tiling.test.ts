import { describe, expect, it } from "vitest";

import { computeTiles, tilesAreExact } from "../src/tiling.js";
import type { UiSegment } from "../src/types.js";

function segment(start: number, end: number, partial: Partial<UiSegment> = {}): UiSegment {
  return {
    start,
    end,
    text: "",
    type: "Claim",
    quality: "Adequate",
    discarded: false,
    ...partial,
  };
}

// Deterministic LCG so failures reproduce.
function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

const TYPES = [
  "Lead",
  "Position",
  "Claim",
  "Counterclaim",
  "Rebuttal",
  "Evidence",
  "Concluding Statement",
];
const QUALITIES = ["Ineffective", "Adequate", "Effective"];

function randomAnalysisText(rng: () => number): string {
  const words = ["the", "essay", "claims", "that", "reading", "helps", "students", "learn"];
  const n = 10 + Math.floor(rng() * 60);
  return Array.from({ length: n }, () => words[Math.floor(rng() * words.length)]).join(" ");
}

function wellFormedSegments(rng: () => number, text: string): UiSegment[] {
  const cuts = new Set<number>();
  const nCuts = Math.floor(rng() * 5);
  for (let i = 0; i < nCuts; i++) cuts.add(1 + Math.floor(rng() * (text.length - 1)));
  const edges = [0, ...[...cuts].sort((a, b) => a - b), text.length];
  const segments: UiSegment[] = [];
  for (let i = 0; i + 1 < edges.length; i++) {
    const start = edges[i]!;
    const end = edges[i + 1]!;
    segments.push(
      segment(start, end, {
        text: text.slice(start, end),
        type: TYPES[Math.floor(rng() * TYPES.length)]!,
        quality: QUALITIES[Math.floor(rng() * QUALITIES.length)]!,
        discarded: rng() < 0.1,
      }),
    );
  }
  return segments;
}

describe("computeTiles", () => {
  it("keeps well-formed segments as-is and tiles exactly", () => {
    const text = "aaaa bbbb cccc";
    const segments = [
      segment(0, 5, { type: "Lead" }),
      segment(5, 10, { type: "Claim" }),
      segment(10, 14, { type: "Evidence" }),
    ];
    const tiles = computeTiles(text, segments);
    expect(tiles).toHaveLength(3);
    expect(tiles.every((t) => t.segment !== null)).toBe(true);
    expect(tilesAreExact(text, tiles)).toBe(true);
  });

  it("fills gaps with plain tiles", () => {
    const text = "aaaa bbbb cccc";
    const tiles = computeTiles(text, [segment(5, 10)]);
    expect(tiles.map((t) => [t.start, t.end, t.segment === null])).toEqual([
      [0, 5, true],
      [5, 10, false],
      [10, 14, true],
    ]);
    expect(tilesAreExact(text, tiles)).toBe(true);
  });

  it("clips overlapping and out-of-range segments", () => {
    const text = "0123456789";
    const tiles = computeTiles(text, [segment(-3, 6), segment(4, 99)]);
    expect(tilesAreExact(text, tiles)).toBe(true);
  });

  it("property: tiles are exact for 100 generated well-formed analyses", () => {
    const rng = makeRng(20240817);
    for (let round = 0; round < 100; round++) {
      const text = randomAnalysisText(rng);
      const segments = wellFormedSegments(rng, text);
      const tiles = computeTiles(text, segments);
      expect(tilesAreExact(text, tiles)).toBe(true);
      // Well-formed input: no filler tiles, one tile per segment, in order.
      expect(tiles.filter((t) => t.segment === null)).toHaveLength(0);
      expect(tiles.map((t) => t.segment)).toEqual(segments);
    }
  });

  it("property: tiles stay exact even for adversarial ranges", () => {
    const rng = makeRng(7);
    for (let round = 0; round < 100; round++) {
      const text = randomAnalysisText(rng);
      const n = Math.floor(rng() * 6);
      const segments: UiSegment[] = [];
      for (let i = 0; i < n; i++) {
        const a = Math.floor(rng() * (text.length + 10)) - 5;
        const b = Math.floor(rng() * (text.length + 10)) - 5;
        segments.push(segment(Math.min(a, b), Math.max(a, b)));
      }
      expect(tilesAreExact(text, computeTiles(text, segments))).toBe(true);
    }
  });
});
