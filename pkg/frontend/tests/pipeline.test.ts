/**
 * End-to-end learning pipeline against a real dataset produced by the
 * imaging engine, and the cross-component loop back through the engine's
 * reconstruction and resolution analysis. Runs at reduced toy scale
 * (32x32 frames, 24 groups) so the whole file stays within CI budget.
 */

import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { loadCheckpoint } from "../src/checkpoints.js";
import { loadDataset, meanSquaredError, pearson, type DatasetGroup } from "../src/dataset.js";
import { readImg1 } from "../src/img1.js";
import { inferSingleShot } from "../src/infer.js";
import { buildDuNet, buildGenerator } from "../src/models.js";
import { DEFAULT_ROLE_MAP, protocolIndex } from "../src/roles.js";
import {
  checkpointPath,
  dunetCheckpointPath,
  trainDunet,
  trainGans,
  type GanMetricsRow,
} from "../src/train.js";

const FRAME = 32;
const GAN_OPTS = { epochs: 4, seed: 7, depth: 3, baseChannels: 12, learningRate: 2e-3 };
const DUNET_OPTS = { epochs: 6, seed: 11, depth: 3, baseChannels: 8, learningRate: 2e-3 };

let root: string;
let datasetDir: string;
let checkpoints: string;
let groups: DatasetGroup[];
let heldOut: DatasetGroup[];
let ganMetrics: GanMetricsRow[];

function engine(args: string[]): string {
  return execFileSync("python3", ["-m", "simshot.cli", ...args], { encoding: "utf-8" });
}

beforeAll(async () => {
  await tf.setBackend("cpu");
  await tf.ready();
  root = fs.mkdtempSync(path.join(os.tmpdir(), "simshot-pipeline-"));
  datasetDir = path.join(root, "dataset");
  checkpoints = path.join(root, "checkpoints");
  engine([
    "dataset", "--seed", "5", "--out", datasetDir,
    "--image.width", String(FRAME), "--image.height", String(FRAME),
    "--phantom.rows", "8", "--phantom.cols", "8",
    "--dataset.n_groups", "24",
  ]);
  groups = loadDataset(datasetDir);
  heldOut = groups.filter((g) => g.split === "test");
  ganMetrics = await trainGans(datasetDir, DEFAULT_ROLE_MAP, checkpoints, GAN_OPTS);
  await trainDunet(datasetDir, checkpoints, DUNET_OPTS);
});

afterAll(() => {
  fs.rmSync(root, { recursive: true, force: true });
});

describe("dataset intake", () => {
  it("loads the engine's train/test tree with six protocol frames per group", () => {
    expect(groups.length).toBe(24);
    expect(heldOut.length).toBe(5);
    for (const g of groups) {
      expect(g.frames.length).toBe(6);
      expect(g.frameSize).toBe(FRAME);
      expect(g.labelSize).toBe(2 * FRAME);
      expect(g.scale).toBeGreaterThan(0);
    }
  });
});

describe("generator training", () => {
  it("rejects an incomplete role map before any training", async () => {
    const partial = new Map(DEFAULT_ROLE_MAP);
    partial.delete(3);
    await expect(
      trainGans(datasetDir, partial, path.join(root, "x"), { epochs: 1, seed: 0 }),
    ).rejects.toThrow(/1\.\.5/);
  });

  it("training loss decreases for every role", () => {
    for (const role of [1, 2, 3, 4, 5]) {
      const curve = ganMetrics.filter((m) => m.role === role).map((m) => m.generatorMse);
      expect(curve.length).toBe(GAN_OPTS.epochs);
      expect(curve[curve.length - 1]).toBeLessThan(curve[0]);
    }
  });

  it("every generator beats the copy-input baseline on held-out L2", () => {
    for (const [role, target] of DEFAULT_ROLE_MAP) {
      const { model } = loadCheckpoint(checkpointPath(checkpoints, role), "generator", buildGenerator);
      const slot = protocolIndex(target);
      let generated = 0;
      let copied = 0;
      for (const g of heldOut) {
        const x = tf.tensor4d(g.frames[0], [1, FRAME, FRAME, 1]);
        const pred = model.predict(x) as tf.Tensor;
        generated += meanSquaredError(pred.dataSync(), g.frames[slot]);
        copied += meanSquaredError(g.frames[0], g.frames[slot]);
        x.dispose();
        pred.dispose();
      }
      model.dispose();
      expect(generated).toBeLessThan(copied);
    }
  });

  it("epochs = 0 still writes loadable (untrained) checkpoints", async () => {
    const dir = path.join(root, "untrained");
    const metrics = await trainGans(datasetDir, DEFAULT_ROLE_MAP, dir, {
      epochs: 0, seed: 3, depth: 2, baseChannels: 4,
    });
    expect(metrics.length).toBe(0);
    for (const role of [1, 2, 3, 4, 5]) {
      const { model } = loadCheckpoint(checkpointPath(dir, role), "generator", buildGenerator);
      const x = tf.zeros([1, FRAME, FRAME, 1]);
      const y = model.predict(x) as tf.Tensor;
      expect(y.shape).toEqual([1, FRAME, FRAME, 1]);
      x.dispose();
      y.dispose();
      model.dispose();
    }
    expect(fs.existsSync(path.join(dir, "metrics.csv"))).toBe(true);
  });
});

describe("reconstructor training", () => {
  it("training loss decreases and metrics are logged", () => {
    const csv = fs.readFileSync(path.join(checkpoints, "dunet_metrics.csv"), "utf-8");
    const losses = csv.trim().split("\n").slice(1).map((line) => Number(line.split(",")[1]));
    expect(losses.length).toBe(DUNET_OPTS.epochs);
    expect(losses[losses.length - 1]).toBeLessThan(losses[0]);
  });

  it("beats the upsampled-widefield baseline on held-out MSE", () => {
    const { model } = loadCheckpoint(dunetCheckpointPath(checkpoints), "dunet", buildDuNet);
    let network = 0;
    let baseline = 0;
    for (const g of heldOut) {
      const inputs = g.frames.map((f) => tf.tensor4d(f, [1, FRAME, FRAME, 1]));
      const pred = model.predict(inputs) as tf.Tensor;
      network += meanSquaredError(pred.dataSync(), g.label);
      inputs.forEach((t) => t.dispose());
      pred.dispose();

      const wf = tf.tensor4d(g.widefield, [1, FRAME, FRAME, 1]);
      const up = tf.image.resizeBilinear(wf as tf.Tensor4D, [2 * FRAME, 2 * FRAME]);
      baseline += meanSquaredError(up.dataSync(), g.label);
      wf.dispose();
      up.dispose();
    }
    model.dispose();
    expect(network).toBeLessThan(baseline);
  });

  it("reruns with the same seed reproduce the loss curve", async () => {
    const opts = { epochs: 1, seed: 41, depth: 2, baseChannels: 4 };
    const first = await trainDunet(datasetDir, path.join(root, "det1"), opts);
    const second = await trainDunet(datasetDir, path.join(root, "det2"), opts);
    expect(first.length).toBe(1);
    expect(Math.abs(first[0].loss - second[0].loss)).toBeLessThan(1e-6);
  });
});

describe("single-shot inference and cross-component loop", () => {
  it("produces engine-consumable stacks and resolution gains on held-out groups", async () => {
    let resolutionWins = 0;
    const pearsons: number[] = [];
    for (const g of heldOut) {
      const outDir = path.join(root, `infer_${g.name}`);
      const result = await inferSingleShot(
        path.join(g.dir, "slice_0.img1"), checkpoints, outDir,
      );
      expect(result.generatorMs).toBeGreaterThan(0);

      // generated (X, 2pi/3) slice against the true simulated one
      const generated = readImg1(path.join(outDir, "slice_1.img1"));
      const truth = readImg1(path.join(g.dir, "slice_1.img1"));
      pearsons.push(pearson(generated.data, truth.data));

      // the engine's classical reconstructor accepts the stack (one
      // recorded + five generated frames)
      engine(["reconstruct", outDir, "--out", outDir]);
      expect(fs.existsSync(path.join(outDir, "sr.img1"))).toBe(true);
      expect(readImg1(path.join(outDir, "sr.img1")).width).toBe(2 * FRAME);

      // the engine's resolution metrology scores the network SR against
      // the group's widefield
      const srOut = engine(["analyze", result.srPath, "--out", outDir]);
      const wfOut = engine(["analyze", path.join(g.dir, "widefield.img1"), "--out", outDir]);
      const srRes = Number(/resolution_nm=([0-9.]+)/.exec(srOut)![1]);
      const wfRes = Number(/resolution_nm=([0-9.]+)/.exec(wfOut)![1]);
      if (srRes < wfRes) resolutionWins += 1;
    }
    // generated phase-shifted frame tracks the true one
    for (const p of pearsons) expect(p).toBeGreaterThanOrEqual(0.8);
    // resolution better than widefield on >= 80% of held-out groups
    expect(resolutionWins).toBeGreaterThanOrEqual(Math.ceil(0.8 * heldOut.length));
  });

  it("rejects a frame whose geometry differs from training", async () => {
    const bad = path.join(root, "bad.img1");
    const img = readImg1(path.join(heldOut[0].dir, "slice_0.img1"));
    const half = FRAME / 2;
    const crop = new Float32Array(half * half);
    for (let r = 0; r < half; r++) {
      crop.set(img.data.subarray(r * FRAME, r * FRAME + half), r * half);
    }
    const { writeImg1 } = await import("../src/img1.js");
    writeImg1(bad, { width: half, height: half, pixelSizeNm: img.pixelSizeNm, data: crop });
    await expect(inferSingleShot(bad, checkpoints, path.join(root, "bad_out"))).rejects.toThrow(
      /trained at/,
    );
  });

  it("fails cleanly when checkpoints are missing", async () => {
    await expect(
      inferSingleShot(
        path.join(heldOut[0].dir, "slice_0.img1"),
        path.join(root, "nowhere"),
        path.join(root, "missing_out"),
      ),
    ).rejects.toThrow(/checkpoint/);
  });
});
