/**
 * Single-shot inference: one recorded (X, phase 0) frame in, a six-slice
 * stack directory (recorded + five generated frames, engine-readable
 * manifest) plus the network's own super-resolution image out.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";

import { loadCheckpoint } from "./checkpoints.js";
import { mean } from "./dataset.js";
import { readImg1, writeImg1, writeStack, type RasterImage, type SliceTag } from "./img1.js";
import { buildDuNet, buildGenerator, type DuNetSpec, type GeneratorSpec } from "./models.js";
import { checkpointPath, dunetCheckpointPath } from "./train.js";
import { DEFAULT_ROLE_MAP, INPUT_TAG, PROTOCOL_TAGS, protocolIndex } from "./roles.js";

export function loadGenerators(
  checkpointsDir: string,
): Map<number, { model: tf.LayersModel; target: SliceTag }> {
  const out = new Map<number, { model: tf.LayersModel; target: SliceTag }>();
  for (const [role, target] of DEFAULT_ROLE_MAP) {
    const file = checkpointPath(checkpointsDir, role);
    if (!fs.existsSync(file)) throw new Error(`missing generator checkpoint ${file}`);
    const { model } = loadCheckpoint<GeneratorSpec>(file, "generator", buildGenerator);
    out.set(role, { model, target });
  }
  return out;
}

export interface SingleShotResult {
  stackDir: string;
  srPath: string;
  /** wall-clock of the network passes only, milliseconds */
  generatorMs: number;
  dunetMs: number;
}

export async function inferSingleShot(
  frame0Path: string,
  checkpointsDir: string,
  outDir: string,
): Promise<SingleShotResult> {
  const frame0 = readImg1(frame0Path);
  if (frame0.width !== frame0.height) {
    throw new Error(`frame must be square, got ${frame0.width}x${frame0.height}`);
  }
  const n = frame0.width;
  const generators = loadGenerators(checkpointsDir);
  for (const [role, { model }] of generators) {
    const sz = (model.inputs[0].shape as number[])[1];
    if (sz !== n) {
      throw new Error(`generator ${role} trained at ${sz}px, frame is ${n}px`);
    }
  }
  const dunetFile = dunetCheckpointPath(checkpointsDir);
  if (!fs.existsSync(dunetFile)) throw new Error(`missing reconstructor checkpoint ${dunetFile}`);
  const { model: dunet } = loadCheckpoint<DuNetSpec>(dunetFile, "dunet", buildDuNet);

  let scale = mean(frame0.data);
  if (!(scale > 0)) scale = 1;
  const normalized = Float32Array.from(frame0.data, (v) => v / scale);

  const frames: Float32Array[] = new Array(6);
  frames[0] = normalized;
  const t0 = performance.now();
  const input = tf.tensor4d(normalized, [1, n, n, 1]);
  for (const { model, target } of generators.values()) {
    const pred = model.predict(input) as tf.Tensor;
    frames[protocolIndex(target)] = pred.dataSync() as Float32Array;
    pred.dispose();
  }
  const generatorMs = performance.now() - t0;

  const t1 = performance.now();
  const inputs = frames.map((f) => tf.tensor4d(f, [1, n, n, 1]));
  const srTensor = dunet.predict(inputs) as tf.Tensor;
  const srData = srTensor.dataSync() as Float32Array;
  const srSize = srTensor.shape[1] as number;
  const dunetMs = performance.now() - t1;
  srTensor.dispose();
  inputs.forEach((t) => t.dispose());
  input.dispose();
  dunet.dispose();
  for (const { model } of generators.values()) model.dispose();

  fs.mkdirSync(outDir, { recursive: true });
  const entries = PROTOCOL_TAGS.map((tag, i) => ({
    tag,
    image: {
      width: n,
      height: n,
      pixelSizeNm: frame0.pixelSizeNm,
      data:
        i === 0
          ? frame0.data
          : Float32Array.from(frames[i], (v) => v * scale),
    } satisfies RasterImage,
  }));
  // the recorded slice keeps its tag by construction
  if (entries[0].tag !== INPUT_TAG) throw new Error("protocol order changed");
  writeStack(outDir, entries);

  const srPath = path.join(outDir, "dunet_sr.img1");
  writeImg1(srPath, {
    width: srSize,
    height: srSize,
    pixelSizeNm: frame0.pixelSizeNm / (srSize / n),
    data: Float32Array.from(srData, (v) => v * scale),
  });
  fs.writeFileSync(
    path.join(outDir, "infer_report.txt"),
    `generator_ms=${generatorMs.toFixed(1)}\ndunet_ms=${dunetMs.toFixed(1)}\n`,
  );
  console.log(
    `single-shot inference: generators ${generatorMs.toFixed(1)} ms, ` +
      `reconstructor ${dunetMs.toFixed(1)} ms -> ${outDir}`,
  );
  return { stackDir: outDir, srPath, generatorMs, dunetMs };
}
