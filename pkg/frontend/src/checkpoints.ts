/**
 * Minimal filesystem checkpoints: architecture spec + ordered weight blobs
 * in one JSON file (weights base64-encoded float32). Internal format.
 */

import * as fs from "node:fs";
import * as tf from "@tensorflow/tfjs";

interface WeightRecord {
  shape: number[];
  b64: string;
}

export interface Checkpoint<Spec> {
  kind: string;
  spec: Spec;
  seed: number;
  weights: WeightRecord[];
}

export function saveCheckpoint<Spec>(
  filePath: string,
  kind: string,
  spec: Spec,
  seed: number,
  model: tf.LayersModel,
): void {
  const weights: WeightRecord[] = model.getWeights().map((w) => {
    const data = w.dataSync() as Float32Array;
    return {
      shape: w.shape.slice(),
      b64: Buffer.from(data.buffer, data.byteOffset, data.byteLength).toString("base64"),
    };
  });
  const tmp = filePath + ".tmp";
  fs.writeFileSync(tmp, JSON.stringify({ kind, spec, seed, weights }));
  fs.renameSync(tmp, filePath);
}

export function loadCheckpoint<Spec>(
  filePath: string,
  kind: string,
  build: (spec: Spec, seed: number) => tf.LayersModel,
): { model: tf.LayersModel; spec: Spec } {
  const record = JSON.parse(fs.readFileSync(filePath, "utf-8")) as Checkpoint<Spec>;
  if (record.kind !== kind) {
    throw new Error(`${filePath}: checkpoint kind ${record.kind}, expected ${kind}`);
  }
  const model = build(record.spec, record.seed);
  const tensors = record.weights.map((w) => {
    const buf = Buffer.from(w.b64, "base64");
    const data = new Float32Array(buf.buffer, buf.byteOffset, buf.byteLength / 4);
    return tf.tensor(Float32Array.from(data), w.shape);
  });
  model.setWeights(tensors);
  tensors.forEach((t) => t.dispose());
  return { model, spec: record.spec };
}
