/**
 * Training objectives.
 *
 * The adversarial value is the batch mean of log D(real) + log(1 - D(fake)),
 * with probabilities clamped 1e-7 away from {0, 1}; the discriminator
 * ascends it and the generator descends its second term. The reconstructor
 * loss is the plain mean squared error between output and label.
 */

import * as tf from "@tensorflow/tfjs";

export const PROB_EPS = 1e-7;

export function ganLoss(dReal: tf.Tensor, dFake: tf.Tensor): tf.Tensor {
  return tf.tidy(() => {
    const real = tf.clipByValue(dReal, PROB_EPS, 1 - PROB_EPS);
    const fake = tf.clipByValue(dFake, PROB_EPS, 1 - PROB_EPS);
    return tf.mean(tf.add(tf.log(real), tf.log(tf.sub(1, fake))));
  });
}

export function ganLossValues(dReal: number[], dFake: number[]): number {
  if (dReal.length !== dFake.length || dReal.length === 0) {
    throw new Error("ganLoss needs equal-length nonempty batches");
  }
  const clamp = (p: number) => Math.min(Math.max(p, PROB_EPS), 1 - PROB_EPS);
  let total = 0;
  for (let i = 0; i < dReal.length; i++) {
    total += Math.log(clamp(dReal[i])) + Math.log(1 - clamp(dFake[i]));
  }
  return total / dReal.length;
}

/** generator's descent target: mean log(1 - D(fake)) */
export function generatorAdversarialLoss(dFake: tf.Tensor): tf.Tensor {
  return tf.tidy(() =>
    tf.mean(tf.log(tf.sub(1, tf.clipByValue(dFake, PROB_EPS, 1 - PROB_EPS)))),
  );
}

export function dunetLoss(output: tf.Tensor, label: tf.Tensor): tf.Tensor {
  if (output.shape.join(",") !== label.shape.join(",")) {
    throw new Error(
      `dimension mismatch: output ${output.shape} vs label ${label.shape}`,
    );
  }
  return tf.tidy(() => tf.mean(tf.square(tf.sub(output, label))));
}

export function dunetLossValues(output: ArrayLike<number>, label: ArrayLike<number>): number {
  if (output.length !== label.length || output.length === 0) {
    throw new Error("dimension mismatch");
  }
  let total = 0;
  for (let i = 0; i < output.length; i++) {
    const d = output[i] - label[i];
    total += d * d;
  }
  return total / output.length;
}
