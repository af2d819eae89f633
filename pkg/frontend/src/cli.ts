/**
 * Command line:
 *
 *   node dist/cli.js train-gans  --dataset DIR --out DIR [--epochs N] [--seed N]
 *   node dist/cli.js train-dunet --dataset DIR --out DIR [--epochs N] [--seed N] [--on-generated DIR]
 *   node dist/cli.js infer       --frame0 FILE --checkpoints DIR --out DIR
 */

import * as tf from "@tensorflow/tfjs";

import { inferSingleShot } from "./infer.js";
import { DEFAULT_ROLE_MAP } from "./roles.js";
import { trainDunet, trainGans } from "./train.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`expected --flag value pairs, got ${argv[i]}`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return flags;
}

function required(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new Error(`missing required --${name}`);
  return value;
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  await tf.setBackend("cpu");
  await tf.ready();
  try {
    const flags = parseFlags(rest);
    const epochs = Number(flags.get("epochs") ?? "10");
    const seed = Number(flags.get("seed") ?? "0");
    if (command === "train-gans") {
      await trainGans(required(flags, "dataset"), DEFAULT_ROLE_MAP, required(flags, "out"), {
        epochs,
        seed,
      });
      return 0;
    }
    if (command === "train-dunet") {
      await trainDunet(required(flags, "dataset"), required(flags, "out"), {
        epochs,
        seed,
        onGeneratedFrom: flags.get("on-generated"),
      });
      return 0;
    }
    if (command === "infer") {
      await inferSingleShot(
        required(flags, "frame0"),
        required(flags, "checkpoints"),
        required(flags, "out"),
      );
      return 0;
    }
    console.error(`unknown command ${command ?? "(none)"}; see module docstring`);
    return 2;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
