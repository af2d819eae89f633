/**
 * Loading the engine's dataset trees (dataset.txt + per-group stack
 * directories with widefield and reconstruction label).
 *
 * All frames and the label of a group are normalized by the mean of the
 * group's recorded (X, phase 0) frame; the engine's reconstruction is
 * scale-equivariant, so the normalized label equals the reconstruction of
 * the normalized frames.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { readImg1, readStack, type RasterImage } from "./img1.js";
import { PROTOCOL_TAGS, protocolIndex, sameTag } from "./roles.js";

export interface DatasetGroup {
  name: string;
  split: "train" | "test";
  dir: string;
  /** per-group normalization: mean of the recorded (X, 0) frame */
  scale: number;
  /** six frames in protocol order, divided by scale */
  frames: Float32Array[];
  frameSize: number;
  pixelSizeNm: number;
  /** engine reconstruction divided by scale (2x grid) */
  label: Float32Array;
  labelSize: number;
  /** camera widefield divided by scale */
  widefield: Float32Array;
}

export function loadDataset(datasetDir: string): DatasetGroup[] {
  const manifest = path.join(datasetDir, "dataset.txt");
  if (!fs.existsSync(manifest)) throw new Error(`no dataset.txt in ${datasetDir}`);
  const groups: DatasetGroup[] = [];
  for (const line of fs.readFileSync(manifest, "utf-8").split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const fields = new Map(trimmed.split(/\s+/).map((t) => t.split("=") as [string, string]));
    const name = fields.get("group")!;
    const split = fields.get("split") as "train" | "test";
    groups.push(loadGroup(path.join(datasetDir, name), name, split));
  }
  if (groups.length === 0) throw new Error(`dataset ${datasetDir} is empty`);
  return groups;
}

function loadGroup(dir: string, name: string, split: "train" | "test"): DatasetGroup {
  const { slices, images } = readStack(dir);
  const ordered: RasterImage[] = new Array(6);
  slices.forEach((slice, i) => {
    ordered[protocolIndex(slice)] = images[i];
  });
  if (ordered.some((img) => img === undefined)) {
    throw new Error(`${dir}: stack does not cover the six protocol slices`);
  }
  const inputIdx = protocolIndex(PROTOCOL_TAGS.find((t) => sameTag(t, PROTOCOL_TAGS[0]))!);
  const frameSize = ordered[0].width;
  if (ordered.some((img) => img.width !== frameSize || img.height !== frameSize)) {
    throw new Error(`${dir}: frames must be square and equally sized`);
  }
  let scale = mean(ordered[inputIdx].data);
  if (!(scale > 0)) scale = 1;
  const frames = ordered.map((img) => divide(img.data, scale));
  const label = readImg1(path.join(dir, "sr_label.img1"));
  const widefield = readImg1(path.join(dir, "widefield.img1"));
  return {
    name,
    split,
    dir,
    scale,
    frames,
    frameSize,
    pixelSizeNm: ordered[0].pixelSizeNm,
    label: divide(label.data, scale),
    labelSize: label.width,
    widefield: divide(widefield.data, scale),
  };
}

export function mean(data: Float32Array): number {
  let total = 0;
  for (let i = 0; i < data.length; i++) total += data[i];
  return total / data.length;
}

function divide(data: Float32Array, scale: number): Float32Array {
  const out = new Float32Array(data.length);
  for (let i = 0; i < data.length; i++) out[i] = data[i] / scale;
  return out;
}

export function meanSquaredError(a: ArrayLike<number>, b: ArrayLike<number>): number {
  if (a.length !== b.length) throw new Error("length mismatch");
  let total = 0;
  for (let i = 0; i < a.length; i++) {
    const d = a[i] - b[i];
    total += d * d;
  }
  return total / a.length;
}

export function pearson(a: ArrayLike<number>, b: ArrayLike<number>): number {
  if (a.length !== b.length) throw new Error("length mismatch");
  const n = a.length;
  let ma = 0;
  let mb = 0;
  for (let i = 0; i < n; i++) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  let cov = 0;
  let va = 0;
  let vb = 0;
  for (let i = 0; i < n; i++) {
    const da = a[i] - ma;
    const db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  return cov / Math.sqrt(va * vb);
}

/** deterministic shuffle (mulberry32 PRNG) */
export function shuffled<T>(items: T[], seed: number): T[] {
  const out = items.slice();
  let state = seed >>> 0 || 1;
  const rand = () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [out[i], out[j]] = [out[j], out[i]];
  }
  return out;
}
