/** Per-seed training and bundle export.
 *
 * For each seed: draw a fresh blob dataset, split train/validation by the
 * configured ratio, train the MLP, then capture the decision layer for every
 * split (train, validation, holdout, test) and write one bundle per split.
 * Activations are exported post-ReLU by default; "pre" mode stores the
 * pre-activation values instead and omits the logits tensor, since logits
 * reconstruct from post-activation values only.
 */

import * as path from "node:path";

import { BlobGenerator, Dataset, splitDataset } from "./data.js";
import { writeBundle, TensorSpec } from "./bundle.js";
import { DEFAULT_TRAIN, Mlp, TrainOptions } from "./model.js";
import { Rng } from "./rng.js";

export interface ExportConfig {
  dataset: {
    kind: "blobs";
    nClasses: number;
    nFeatures: number;
    separation: number;
    noise: number;
    trainPoolPerClass: number;
    holdoutPerClass: number;
    testPerClass: number;
  };
  hiddenUnits: number;
  epochs: number;
  splitRatio: number; // train fraction of the train/validation pool
  seeds: number[];
  outputDir: string;
  activationStage?: "post" | "pre";
  train?: Partial<TrainOptions>;
}

export interface SeedResult {
  seed: number;
  trainAccuracy: number;
  validationAccuracy: number;
  finalLoss: number;
  bundleDirs: Record<string, string>;
}

export function validateConfig(config: ExportConfig): void {
  if (!(config.splitRatio > 0 && config.splitRatio < 1)) {
    throw new Error(`splitRatio must lie in (0, 1), got ${config.splitRatio}`);
  }
  if (config.seeds.length < 1) throw new Error("need at least one seed");
  if (config.dataset.kind !== "blobs") {
    throw new Error(`unknown dataset kind '${config.dataset.kind}'`);
  }
}

function captureSplit(
  model: Mlp,
  data: Dataset,
  stage: "post" | "pre",
  meta: Record<string, string>,
  dir: string,
): void {
  const { preActivations, activations, logits } = model.forward(data.features, data.n);
  const decision = stage === "post" ? activations : preActivations;
  const tensors: TensorSpec[] = [
    { name: "activations", dtype: "f64", shape: [data.n, model.hidden], data: decision },
    { name: "weights", dtype: "f64", shape: [model.k, model.hidden], data: model.w2 },
    { name: "biases", dtype: "f64", shape: [model.k], data: model.b2 },
    {
      name: "labels",
      dtype: "i64",
      shape: [data.n],
      data: BigInt64Array.from(Array.from(data.labels, (v) => BigInt(v))),
    },
  ];
  if (stage === "post") {
    // logits = activations . weights^T + biases holds exactly in this mode
    tensors.push({ name: "logits", dtype: "f64", shape: [data.n, model.k], data: logits });
  }
  writeBundle(dir, tensors, { ...meta, activation_stage: `${stage}-activation` });
}

export function exportSeed(config: ExportConfig, seed: number): SeedResult {
  const stage = config.activationStage ?? "post";
  const opts: TrainOptions = { ...DEFAULT_TRAIN, epochs: config.epochs, ...config.train };
  const ds = config.dataset;

  const dataRng = new Rng(seed, 1);
  const generator = new BlobGenerator(
    { nClasses: ds.nClasses, nFeatures: ds.nFeatures, separation: ds.separation, noise: ds.noise },
    dataRng,
  );
  const pool = generator.draw(ds.trainPoolPerClass, dataRng);
  const [train, validation] = splitDataset(pool, config.splitRatio, new Rng(seed, 2));
  const holdout = generator.draw(ds.holdoutPerClass, dataRng);
  const test = generator.draw(ds.testPerClass, dataRng);

  const model = new Mlp(ds.nFeatures, config.hiddenUnits, ds.nClasses, new Rng(seed, 3));
  const losses = model.train(train, opts, new Rng(seed, 4));

  const result: SeedResult = {
    seed,
    trainAccuracy: model.accuracy(train),
    validationAccuracy: model.accuracy(validation),
    finalLoss: losses[losses.length - 1],
    bundleDirs: {},
  };

  const splits: Record<string, Dataset> = { train, validation, holdout, test };
  for (const [split, data] of Object.entries(splits)) {
    const dir = path.join(config.outputDir, `seed${seed}`, split);
    captureSplit(model, data, stage, {
      dataset: "synthetic-blobs",
      split,
      seed: String(seed),
      hidden_units: String(config.hiddenUnits),
      epochs: String(config.epochs),
      split_ratio: String(config.splitRatio),
      validation_accuracy: result.validationAccuracy.toFixed(4),
      rng: "sfc32",
    }, dir);
    result.bundleDirs[split] = dir;
  }
  return result;
}

export function runExport(config: ExportConfig): SeedResult[] {
  validateConfig(config);
  const results: SeedResult[] = [];
  for (const seed of config.seeds) {
    // a diverged model must not produce bundles: exportSeed throws before
    // any capture if the loss goes non-finite
    results.push(exportSeed(config, seed));
  }
  return results;
}
