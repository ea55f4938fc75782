/** The closed legends: exactly 7 argument-type colors and 3 quality styles.
 * Labels outside these sets must render as an error state, never silently. */

export const TYPE_COLORS: ReadonlyMap<string, string> = new Map([
  ["Lead", "#7b4fa6"],
  ["Position", "#2b6cb0"],
  ["Claim", "#2f855a"],
  ["Counterclaim", "#c05621"],
  ["Rebuttal", "#b83232"],
  ["Evidence", "#2c7a7b"],
  ["Concluding Statement", "#718096"],
]);

export const QUALITY_CLASSES: ReadonlyMap<string, string> = new Map([
  ["Ineffective", "badge-ineffective"],
  ["Adequate", "badge-adequate"],
  ["Effective", "badge-effective"],
]);

export function typeColor(label: string): string | undefined {
  return TYPE_COLORS.get(label);
}

export function qualityClass(label: string): string | undefined {
  return QUALITY_CLASSES.get(label);
}
