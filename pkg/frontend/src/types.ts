/** Shapes mirrored from the analyze endpoint, validated at the boundary. */

export interface UiSegment {
  start: number;
  end: number;
  text: string;
  type: string | null;
  quality: string | null;
  discarded: boolean;
}

export interface UiAnalysis {
  text: string;
  model: string;
  error: string | null;
  spans_discarded: number;
  segmentation_attempts: number;
  segments: UiSegment[];
}

export class ApiShapeError extends Error {}

function asString(value: unknown, field: string): string {
  if (typeof value !== "string") throw new ApiShapeError(`${field} must be a string`);
  return value;
}

function asNumber(value: unknown, field: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new ApiShapeError(`${field} must be a finite number`);
  }
  return value;
}

function asOptionalString(value: unknown, field: string): string | null {
  if (value === null || value === undefined) return null;
  return asString(value, field);
}

export function parseAnalysis(payload: unknown): UiAnalysis {
  if (typeof payload !== "object" || payload === null) {
    throw new ApiShapeError("analysis payload must be an object");
  }
  const obj = payload as Record<string, unknown>;
  if (!Array.isArray(obj.segments)) throw new ApiShapeError("segments must be an array");
  const segments = obj.segments.map((raw, i) => {
    if (typeof raw !== "object" || raw === null) {
      throw new ApiShapeError(`segment ${i} must be an object`);
    }
    const seg = raw as Record<string, unknown>;
    return {
      start: asNumber(seg.start, `segment ${i}.start`),
      end: asNumber(seg.end, `segment ${i}.end`),
      text: asString(seg.text, `segment ${i}.text`),
      type: asOptionalString(seg.type, `segment ${i}.type`),
      quality: asOptionalString(seg.quality, `segment ${i}.quality`),
      discarded: Boolean(seg.discarded),
    };
  });
  return {
    text: asString(obj.text, "text"),
    model: asString(obj.model, "model"),
    error: asOptionalString(obj.error, "error"),
    spans_discarded: asNumber(obj.spans_discarded ?? 0, "spans_discarded"),
    segmentation_attempts: asNumber(obj.segmentation_attempts ?? 0, "segmentation_attempts"),
    segments,
  };
}
