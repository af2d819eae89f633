/**
 * Generator role assignments: which missing protocol slice each of the five
 * generators synthesizes from the single recorded (X, phase 0) frame.
 */

import type { SliceTag } from "./img1.js";

export const PHASES = [0, (2 * Math.PI) / 3, (4 * Math.PI) / 3] as const;

/** the six protocol tags in acquisition order */
export const PROTOCOL_TAGS: SliceTag[] = [
  { orientation: "X", phaseRad: PHASES[0] },
  { orientation: "X", phaseRad: PHASES[1] },
  { orientation: "X", phaseRad: PHASES[2] },
  { orientation: "Y", phaseRad: PHASES[0] },
  { orientation: "Y", phaseRad: PHASES[1] },
  { orientation: "Y", phaseRad: PHASES[2] },
];

export const INPUT_TAG: SliceTag = PROTOCOL_TAGS[0];

export type RoleMap = Map<number, SliceTag>;

export const DEFAULT_ROLE_MAP: RoleMap = new Map([
  [1, PROTOCOL_TAGS[1]],
  [2, PROTOCOL_TAGS[2]],
  [3, PROTOCOL_TAGS[3]],
  [4, PROTOCOL_TAGS[4]],
  [5, PROTOCOL_TAGS[5]],
]);

export function sameTag(a: SliceTag, b: SliceTag): boolean {
  return a.orientation === b.orientation && Math.abs(a.phaseRad - b.phaseRad) < 1e-6;
}

/** The map must be a bijection from {1..5} onto the five non-input slices. */
export function validateRoleMap(roles: RoleMap): void {
  const keys = [...roles.keys()].sort((a, b) => a - b);
  if (keys.length !== 5 || keys.some((k, i) => k !== i + 1)) {
    throw new Error(`role map keys must be exactly 1..5, got [${keys.join(", ")}]`);
  }
  const targets = PROTOCOL_TAGS.slice(1);
  const used = new Set<number>();
  for (const tag of roles.values()) {
    const idx = targets.findIndex((t) => sameTag(t, tag));
    if (idx < 0) throw new Error(`role target (${tag.orientation}, ${tag.phaseRad}) is not a protocol slice`);
    if (used.has(idx)) throw new Error("role map targets a slice twice");
    used.add(idx);
  }
}

/** index of a tag within the six-slice protocol order */
export function protocolIndex(tag: SliceTag): number {
  const idx = PROTOCOL_TAGS.findIndex((t) => sameTag(t, tag));
  if (idx < 0) throw new Error(`(${tag.orientation}, ${tag.phaseRad}) is not a protocol tag`);
  return idx;
}
