/**
 * IMG1 raster file exchange with the imaging engine, plus six-slice stack
 * directories with their `stack.txt` manifest.
 *
 * IMG1 layout (little-endian): magic "SIMG" | u16 version=1 | u8 dtype
 * (1 = f32, 2 = u16) | u8 pad=0 | u32 width | u32 height | f64 pixel_size_nm,
 * then the row-major payload. The learner only writes f32.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface RasterImage {
  width: number;
  height: number;
  pixelSizeNm: number;
  /** row-major, length width * height */
  data: Float32Array;
}

const HEADER_BYTES = 24;
const MAGIC = "SIMG";

export function readImg1(filePath: string): RasterImage {
  const raw = fs.readFileSync(filePath);
  if (raw.length < HEADER_BYTES) {
    throw new Error(`${filePath}: truncated IMG1 header (${raw.length} bytes)`);
  }
  const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
  const magic = raw.subarray(0, 4).toString("ascii");
  if (magic !== MAGIC) throw new Error(`${filePath}: bad magic ${JSON.stringify(magic)}`);
  const version = view.getUint16(4, true);
  if (version !== 1) throw new Error(`${filePath}: unsupported version ${version}`);
  const dtype = view.getUint8(6);
  if (dtype !== 1 && dtype !== 2) throw new Error(`${filePath}: unknown dtype ${dtype}`);
  const width = view.getUint32(8, true);
  const height = view.getUint32(12, true);
  const pixelSizeNm = view.getFloat64(16, true);
  const count = width * height;
  const sampleBytes = dtype === 1 ? 4 : 2;
  if (raw.length !== HEADER_BYTES + count * sampleBytes) {
    throw new Error(`${filePath}: payload length mismatch`);
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] =
      dtype === 1
        ? view.getFloat32(HEADER_BYTES + 4 * i, true)
        : view.getUint16(HEADER_BYTES + 2 * i, true) / 65535;
  }
  return { width, height, pixelSizeNm, data };
}

export function writeImg1(filePath: string, img: RasterImage): void {
  const count = img.width * img.height;
  if (img.data.length !== count) throw new Error("data length != width * height");
  const buf = Buffer.alloc(HEADER_BYTES + 4 * count);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt16LE(1, 4);
  buf.writeUInt8(1, 6);
  buf.writeUInt8(0, 7);
  buf.writeUInt32LE(img.width, 8);
  buf.writeUInt32LE(img.height, 12);
  buf.writeDoubleLE(img.pixelSizeNm, 16);
  for (let i = 0; i < count; i++) buf.writeFloatLE(img.data[i], HEADER_BYTES + 4 * i);
  const tmp = filePath + ".tmp";
  fs.writeFileSync(tmp, buf);
  fs.renameSync(tmp, filePath);
}

export type Orientation = "X" | "Y";

export interface SliceTag {
  orientation: Orientation;
  phaseRad: number;
}

export interface StackSlice extends SliceTag {
  index: number;
  file: string;
}

export function readStackManifest(stackDir: string): StackSlice[] {
  const text = fs.readFileSync(path.join(stackDir, "stack.txt"), "utf-8");
  const slices: StackSlice[] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed || trimmed.startsWith("#")) continue;
    const fields = new Map<string, string>();
    for (const token of trimmed.split(/\s+/)) {
      const eq = token.indexOf("=");
      if (eq < 0) throw new Error(`stack.txt: malformed token ${token}`);
      fields.set(token.slice(0, eq), token.slice(eq + 1));
    }
    slices.push({
      index: Number(fields.get("slice")),
      orientation: fields.get("orientation") as Orientation,
      phaseRad: Number(fields.get("phase")),
      file: fields.get("file")!,
    });
  }
  slices.sort((a, b) => a.index - b.index);
  if (slices.length !== 6) throw new Error(`stack.txt lists ${slices.length} slices, expected 6`);
  return slices;
}

export function readStack(stackDir: string): { slices: StackSlice[]; images: RasterImage[] } {
  const slices = readStackManifest(stackDir);
  const images = slices.map((s) => readImg1(path.join(stackDir, s.file)));
  return { slices, images };
}

export function writeStack(
  stackDir: string,
  entries: { tag: SliceTag; image: RasterImage }[],
): void {
  if (entries.length !== 6) throw new Error(`stack needs 6 slices, got ${entries.length}`);
  fs.mkdirSync(stackDir, { recursive: true });
  const lines: string[] = [];
  entries.forEach(({ tag, image }, i) => {
    const file = `slice_${i}.img1`;
    writeImg1(path.join(stackDir, file), image);
    lines.push(
      `slice=${i} orientation=${tag.orientation} phase=${formatPhase(tag.phaseRad)} file=${file}`,
    );
  });
  fs.writeFileSync(path.join(stackDir, "stack.txt"), lines.join("\n") + "\n");
}

/** nine significant digits, the manifest convention of the engine */
export function formatPhase(phase: number): string {
  if (phase === 0) return "0";
  return Number(phase.toPrecision(9)).toString();
}
