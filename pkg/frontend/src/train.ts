/**
 * Training loops for the five frame generators and the six-encoder
 * reconstructor.
 *
 * Each generator trains adversarially against its own discriminator on
 * (recorded frame -> target slice) pairs, one discriminator step then one
 * generator step per batch; the generator objective adds a paired MSE term
 * to the adversarial one so the mapping (not just the marginal) is learned
 * at desk scale. The reconstructor minimizes the plain MSE to the engine's
 * reconstruction label.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";

import { saveCheckpoint } from "./checkpoints.js";
import { loadDataset, shuffled, type DatasetGroup } from "./dataset.js";
import { dunetLoss, ganLoss, generatorAdversarialLoss } from "./losses.js";
import {
  buildDiscriminator,
  buildDuNet,
  buildGenerator,
  DEFAULT_GENERATOR,
  type DuNetSpec,
  type GeneratorSpec,
} from "./models.js";
import { protocolIndex, validateRoleMap, type RoleMap } from "./roles.js";

export interface GanTrainOptions {
  epochs: number;
  seed: number;
  batchSize?: number;
  learningRate?: number;
  /** weight of the adversarial term in the generator objective */
  adversarialWeight?: number;
  depth?: number;
  baseChannels?: number;
}

export interface GanMetricsRow {
  role: number;
  epoch: number;
  discriminatorValue: number;
  generatorAdversarial: number;
  generatorMse: number;
}

function batches(groups: DatasetGroup[], batchSize: number, seed: number): DatasetGroup[][] {
  const order = shuffled(groups, seed);
  const out: DatasetGroup[][] = [];
  for (let i = 0; i < order.length; i += batchSize) {
    out.push(order.slice(i, i + batchSize));
  }
  return out;
}

function frameTensor(groups: DatasetGroup[], slot: number): tf.Tensor4D {
  const n = groups[0].frameSize;
  const data = new Float32Array(groups.length * n * n);
  groups.forEach((g, i) => data.set(g.frames[slot], i * n * n));
  return tf.tensor4d(data, [groups.length, n, n, 1]);
}

/** long synchronous CPU batches starve the event loop; yield between them */
function breathe(): Promise<void> {
  return new Promise((resolve) => setImmediate(resolve));
}

function trainableVars(model: tf.LayersModel): tf.Variable[] {
  // LayerVariable.val is not part of the public typings but is the only
  // handle on the underlying tf.Variable needed by optimizer.minimize
  return model.trainableWeights.map((w) => (w as unknown as { val: tf.Variable }).val);
}

export function checkpointPath(outDir: string, role: number): string {
  return path.join(outDir, `generator_${role}.ckpt.json`);
}

export async function trainGans(
  datasetDir: string,
  roleMap: RoleMap,
  outDir: string,
  opts: GanTrainOptions,
): Promise<GanMetricsRow[]> {
  validateRoleMap(roleMap);
  if (opts.epochs < 0) throw new Error(`epochs must be >= 0, got ${opts.epochs}`);
  const groups = loadDataset(datasetDir);
  const train = groups.filter((g) => g.split === "train");
  if (train.length === 0) throw new Error("dataset has no training groups");
  const size = train[0].frameSize;
  const batchSize = opts.batchSize ?? 4;
  const advWeight = opts.adversarialWeight ?? 0.02;
  const lr = opts.learningRate ?? 2e-3;
  const depth = opts.depth ?? DEFAULT_GENERATOR.depth;
  const baseChannels = opts.baseChannels ?? DEFAULT_GENERATOR.baseChannels;

  fs.mkdirSync(outDir, { recursive: true });
  const metrics: GanMetricsRow[] = [];

  for (const [role, target] of [...roleMap.entries()].sort((a, b) => a[0] - b[0])) {
    const targetSlot = protocolIndex(target);
    const genSpec: GeneratorSpec = { size, depth, baseChannels };
    const generator = buildGenerator(genSpec, opts.seed + 101 * role);
    const discriminator = buildDiscriminator(
      { size, depth, baseChannels },
      opts.seed + 101 * role + 17,
    );
    const gOpt = tf.train.adam(lr);
    const dOpt = tf.train.adam(lr);
    const gVars = trainableVars(generator);
    const dVars = trainableVars(discriminator);

    for (let epoch = 0; epoch < opts.epochs; epoch++) {
      let dSum = 0;
      let advSum = 0;
      let mseSum = 0;
      const epochBatches = batches(train, batchSize, opts.seed + 7919 * role + epoch);
      for (const batch of epochBatches) {
        const xs = frameTensor(batch, 0);
        const ys = frameTensor(batch, targetSlot);

        const fake = tf.tidy(() => generator.apply(xs) as tf.Tensor);
        const dValue = dOpt.minimize(
          () => {
            const value = ganLoss(
              discriminator.apply(ys) as tf.Tensor,
              discriminator.apply(fake) as tf.Tensor,
            );
            return tf.neg(value) as tf.Scalar; // the discriminator ascends the value
          },
          true,
          dVars,
        )!;
        dSum -= dValue.dataSync()[0];
        dValue.dispose();
        fake.dispose();

        let advVal = 0;
        let mseVal = 0;
        const gValue = gOpt.minimize(
          () => {
            const out = generator.apply(xs) as tf.Tensor;
            const adv = generatorAdversarialLoss(discriminator.apply(out) as tf.Tensor);
            const mse = dunetLoss(out, ys);
            advVal = adv.dataSync()[0];
            mseVal = mse.dataSync()[0];
            return tf.add(tf.mul(advWeight, adv), mse) as tf.Scalar;
          },
          true,
          gVars,
        )!;
        gValue.dispose();
        advSum += advVal;
        mseSum += mseVal;

        xs.dispose();
        ys.dispose();
        await breathe();
      }
      metrics.push({
        role,
        epoch,
        discriminatorValue: dSum / epochBatches.length,
        generatorAdversarial: advSum / epochBatches.length,
        generatorMse: mseSum / epochBatches.length,
      });
    }

    saveCheckpoint(checkpointPath(outDir, role), "generator", genSpec, opts.seed + 101 * role, generator);
    generator.dispose();
    discriminator.dispose();
  }

  const lines = ["role,epoch,discriminator_value,generator_adversarial,generator_mse"];
  for (const row of metrics) {
    lines.push(
      `${row.role},${row.epoch},${row.discriminatorValue},${row.generatorAdversarial},${row.generatorMse}`,
    );
  }
  fs.writeFileSync(path.join(outDir, "metrics.csv"), lines.join("\n") + "\n");
  return metrics;
}

export interface DunetTrainOptions {
  epochs: number;
  seed: number;
  batchSize?: number;
  learningRate?: number;
  depth?: number;
  baseChannels?: number;
  /** train on frames synthesized by these generator checkpoints instead of
   * the recorded ones (single-shot training regime) */
  onGeneratedFrom?: string;
}

export function dunetCheckpointPath(outDir: string): string {
  return path.join(outDir, "dunet.ckpt.json");
}

export async function trainDunet(
  datasetDir: string,
  outDir: string,
  opts: DunetTrainOptions,
): Promise<{ epoch: number; loss: number }[]> {
  if (opts.epochs < 0) throw new Error(`epochs must be >= 0, got ${opts.epochs}`);
  const groups = loadDataset(datasetDir);
  const train = groups.filter((g) => g.split === "train");
  if (train.length === 0) throw new Error("dataset has no training groups");
  const size = train[0].frameSize;
  const batchSize = opts.batchSize ?? 4;
  const spec: DuNetSpec = {
    size,
    depth: opts.depth ?? 3,
    baseChannels: opts.baseChannels ?? 8,
  };

  let frameOf = (g: DatasetGroup, slot: number) => g.frames[slot];
  if (opts.onGeneratedFrom) {
    const generated = await synthesizeFrames(train, opts.onGeneratedFrom);
    frameOf = (g, slot) => (slot === 0 ? g.frames[0] : generated.get(g.name)![slot]);
  }

  const model = buildDuNet(spec, opts.seed);
  const optimizer = tf.train.adam(opts.learningRate ?? 2e-3);
  const vars = trainableVars(model);
  const history: { epoch: number; loss: number }[] = [];

  for (let epoch = 0; epoch < opts.epochs; epoch++) {
    let lossSum = 0;
    const epochBatches = batches(train, batchSize, opts.seed + 104729 * (epoch + 1));
    for (const batch of epochBatches) {
      const n = batch[0].frameSize;
      const inputs = Array.from({ length: 6 }, (_, slot) => {
        const data = new Float32Array(batch.length * n * n);
        batch.forEach((g, i) => data.set(frameOf(g, slot), i * n * n));
        return tf.tensor4d(data, [batch.length, n, n, 1]);
      });
      const m = batch[0].labelSize;
      const labelData = new Float32Array(batch.length * m * m);
      batch.forEach((g, i) => labelData.set(g.label, i * m * m));
      const labels = tf.tensor4d(labelData, [batch.length, m, m, 1]);

      const value = optimizer.minimize(
        () => dunetLoss(model.apply(inputs) as tf.Tensor, labels) as tf.Scalar,
        true,
        vars,
      )!;
      lossSum += value.dataSync()[0];
      value.dispose();
      inputs.forEach((t) => t.dispose());
      labels.dispose();
      await breathe();
    }
    history.push({ epoch, loss: lossSum / epochBatches.length });
  }

  fs.mkdirSync(outDir, { recursive: true });
  saveCheckpoint(dunetCheckpointPath(outDir), "dunet", spec, opts.seed, model);
  model.dispose();
  const lines = ["epoch,loss"];
  for (const row of history) lines.push(`${row.epoch},${row.loss}`);
  fs.writeFileSync(path.join(outDir, "dunet_metrics.csv"), lines.join("\n") + "\n");
  return history;
}

/** run the five generators over each group's recorded frame */
async function synthesizeFrames(
  groups: DatasetGroup[],
  checkpointsDir: string,
): Promise<Map<string, Float32Array[]>> {
  const { loadGenerators } = await import("./infer.js");
  const generators = loadGenerators(checkpointsDir);
  const out = new Map<string, Float32Array[]>();
  for (const g of groups) {
    const n = g.frameSize;
    const input = tf.tensor4d(g.frames[0], [1, n, n, 1]);
    const frames: Float32Array[] = new Array(6);
    frames[0] = g.frames[0];
    for (const [role, { model, target }] of generators) {
      void role;
      const pred = model.predict(input) as tf.Tensor;
      frames[protocolIndex(target)] = pred.dataSync() as Float32Array;
      pred.dispose();
    }
    input.dispose();
    out.set(g.name, frames);
  }
  for (const { model } of generators.values()) model.dispose();
  return out;
}
