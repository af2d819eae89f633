/**
 * Network architectures.
 *
 * Generator: U-Net with 3x3 stride-2 convolutions down, 5x5 stride-2
 * transposed convolutions up, skip connections, output sized like the input.
 *
 * Discriminator: stride-2 convolutional classifier ending in one sigmoid
 * scalar (real vs generated).
 *
 * Reconstructor ("du-net"): six independent encoders, one per raw frame;
 * the per-level features of all six are concatenated and decoded by a single
 * decoder whose extra top level doubles the resolution.
 */

import * as tf from "@tensorflow/tfjs";

export interface GeneratorSpec {
  size: number;
  depth: number;
  baseChannels: number;
}

export interface DiscriminatorSpec {
  size: number;
  depth: number;
  baseChannels: number;
}

export interface DuNetSpec {
  size: number;
  depth: number;
  baseChannels: number;
}

export const DEFAULT_GENERATOR: Omit<GeneratorSpec, "size"> = { depth: 4, baseChannels: 16 };

function channelsAt(base: number, level: number): number {
  return base * 2 ** level;
}

/** deterministic per-layer initializer seeds */
class SeedStream {
  constructor(private state: number) {}

  next(): number {
    this.state = (Math.imul(this.state, 1664525) + 1013904223) >>> 0;
    return this.state;
  }
}

function conv(
  x: tf.SymbolicTensor,
  filters: number,
  kernel: number,
  stride: number,
  activation: "relu" | undefined,
  seeds: SeedStream,
  name: string,
): tf.SymbolicTensor {
  return tf.layers
    .conv2d({
      filters,
      kernelSize: kernel,
      strides: stride,
      padding: "same",
      activation,
      kernelInitializer: tf.initializers.glorotUniform({ seed: seeds.next() }),
      name,
    })
    .apply(x) as tf.SymbolicTensor;
}

function deconv(
  x: tf.SymbolicTensor,
  filters: number,
  activation: "relu" | undefined,
  seeds: SeedStream,
  name: string,
): tf.SymbolicTensor {
  return tf.layers
    .conv2dTranspose({
      filters,
      kernelSize: 5,
      strides: 2,
      padding: "same",
      activation,
      kernelInitializer: tf.initializers.glorotUniform({ seed: seeds.next() }),
      name,
    })
    .apply(x) as tf.SymbolicTensor;
}

export function buildGenerator(spec: GeneratorSpec, seed: number): tf.LayersModel {
  if (spec.size % 2 ** spec.depth !== 0) {
    throw new Error(`size ${spec.size} not divisible by 2^depth`);
  }
  const seeds = new SeedStream(seed >>> 0 || 1);
  const input = tf.input({ shape: [spec.size, spec.size, 1] });
  const skips: tf.SymbolicTensor[] = [];
  let x = input;
  for (let level = 0; level < spec.depth; level++) {
    x = conv(x, channelsAt(spec.baseChannels, level), 3, 2, "relu", seeds, `enc_${level}`);
    skips.push(x);
  }
  for (let level = spec.depth - 1; level >= 0; level--) {
    if (level < spec.depth - 1) {
      x = tf.layers
        .concatenate({ name: `skip_${level}` })
        .apply([x, skips[level]]) as tf.SymbolicTensor;
    }
    const filters = level === 0 ? spec.baseChannels : channelsAt(spec.baseChannels, level - 1);
    x = deconv(x, filters, "relu", seeds, `dec_${level}`);
  }
  const output = conv(x, 1, 3, 1, undefined, seeds, "out");
  return tf.model({ inputs: input, outputs: output });
}

export function buildDiscriminator(spec: DiscriminatorSpec, seed: number): tf.LayersModel {
  const seeds = new SeedStream((seed ^ 0x5f3759df) >>> 0 || 2);
  const input = tf.input({ shape: [spec.size, spec.size, 1] });
  let x = input;
  for (let level = 0; level < spec.depth; level++) {
    x = conv(x, channelsAt(spec.baseChannels, level), 3, 2, "relu", seeds, `d_${level}`);
  }
  x = tf.layers.flatten().apply(x) as tf.SymbolicTensor;
  const output = tf.layers
    .dense({
      units: 1,
      activation: "sigmoid",
      kernelInitializer: tf.initializers.glorotUniform({ seed: seeds.next() }),
      name: "d_out",
    })
    .apply(x) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: output });
}

export function buildDuNet(spec: DuNetSpec, seed: number): tf.LayersModel {
  if (spec.size % 2 ** spec.depth !== 0) {
    throw new Error(`size ${spec.size} not divisible by 2^depth`);
  }
  const seeds = new SeedStream((seed ^ 0x9e3779b9) >>> 0 || 3);
  const inputs = Array.from({ length: 6 }, (_, i) =>
    tf.input({ shape: [spec.size, spec.size, 1], name: `frame_${i}` }),
  );
  // six encoders, features of each level fused across frames
  const perLevel: tf.SymbolicTensor[][] = Array.from({ length: spec.depth }, () => []);
  for (let f = 0; f < 6; f++) {
    let x = inputs[f];
    for (let level = 0; level < spec.depth; level++) {
      x = conv(x, channelsAt(spec.baseChannels, level), 3, 2, "relu", seeds, `e${f}_${level}`);
      perLevel[level].push(x);
    }
  }
  const fused = perLevel.map(
    (feats, level) =>
      tf.layers.concatenate({ name: `fuse_${level}` }).apply(feats) as tf.SymbolicTensor,
  );
  let x = fused[spec.depth - 1];
  for (let level = spec.depth - 1; level >= 0; level--) {
    if (level < spec.depth - 1) {
      x = tf.layers
        .concatenate({ name: `dskip_${level}` })
        .apply([x, fused[level]]) as tf.SymbolicTensor;
    }
    x = deconv(x, channelsAt(spec.baseChannels, Math.max(level - 1, 0)), "relu", seeds, `d_${level}`);
  }
  // one extra level above the input resolution: output is 2x the frames
  x = deconv(x, spec.baseChannels, "relu", seeds, "d_up");
  const output = conv(x, 1, 3, 1, undefined, seeds, "sr_out");
  return tf.model({ inputs, outputs: output });
}
