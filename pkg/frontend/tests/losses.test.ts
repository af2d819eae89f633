import * as tf from "@tensorflow/tfjs";
import { beforeAll, describe, expect, it } from "vitest";

import { dunetLoss, dunetLossValues, ganLoss, ganLossValues } from "../src/losses.js";

beforeAll(async () => {
  await tf.setBackend("cpu");
  await tf.ready();
});

describe("adversarial value", () => {
  it("is ~0 for a perfect discriminator", () => {
    const eps = 1e-7;
    expect(Math.abs(ganLossValues([1 - eps], [eps]))).toBeLessThan(1e-6);
  });

  it("equals 2 log 0.5 for a blind discriminator", () => {
    expect(ganLossValues([0.5], [0.5])).toBeCloseTo(-1.3862944, 6);
  });

  it("matches the hand-computed two-sample batch", () => {
    // (log .9 + log .9 + log .8 + log .8) / 2
    expect(ganLossValues([0.9, 0.8], [0.1, 0.2])).toBeCloseTo(-0.32850407, 6);
  });

  it("clamps boundary probabilities to stay finite", () => {
    expect(Number.isFinite(ganLossValues([1.0], [0.0]))).toBe(true);
    expect(Number.isFinite(ganLossValues([0.0], [1.0]))).toBe(true);
  });

  it("tensor and scalar paths agree", () => {
    const real = [0.93, 0.41, 0.77];
    const fake = [0.12, 0.55, 0.08];
    const t = ganLoss(tf.tensor1d(real), tf.tensor1d(fake));
    expect(t.dataSync()[0]).toBeCloseTo(ganLossValues(real, fake), 6);
    t.dispose();
  });

  it("rejects mismatched batches", () => {
    expect(() => ganLossValues([0.5], [0.5, 0.5])).toThrow();
  });
});

describe("reconstruction loss", () => {
  it("is zero when output equals label", () => {
    expect(dunetLossValues([1, 2, 3], [1, 2, 3])).toBe(0);
  });

  it("is c^2 for a constant offset c", () => {
    const label = [0.4, 1.1, -2.0, 0.0];
    const output = label.map((v) => v + 0.3);
    expect(dunetLossValues(output, label)).toBeCloseTo(0.09, 9);
  });

  it("matches the hand-computed 2x2 example", () => {
    // ((0 + 1 + 4 + 9) / 4)
    expect(dunetLossValues([1, 2, 3, 4], [1, 1, 1, 1])).toBeCloseTo(3.5, 9);
  });

  it("tensor path agrees and rejects shape mismatches", () => {
    const out = tf.tensor2d([[1, 2], [3, 4]]);
    const label = tf.tensor2d([[1, 1], [1, 1]]);
    const t = dunetLoss(out, label);
    expect(t.dataSync()[0]).toBeCloseTo(3.5, 6);
    t.dispose();
    const bad = tf.tensor1d([1, 2, 3]);
    expect(() => dunetLoss(out, bad)).toThrow(/mismatch/);
    out.dispose();
    label.dispose();
    bad.dispose();
  });
});
