import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, describe, expect, it } from "vitest";

import { readPayload } from "../src/bundle.js";
import { ExportConfig, exportSeed, runExport } from "../src/export.js";

let tmpDirs: string[] = [];
function tmpDir(): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "export-"));
  tmpDirs.push(dir);
  return dir;
}
afterEach(() => {
  for (const dir of tmpDirs) fs.rmSync(dir, { recursive: true, force: true });
  tmpDirs = [];
});

function smallConfig(outputDir: string, overrides: Partial<ExportConfig> = {}): ExportConfig {
  return {
    dataset: {
      kind: "blobs",
      nClasses: 3,
      nFeatures: 8,
      separation: 2.5,
      noise: 0.9,
      trainPoolPerClass: 250,
      holdoutPerClass: 80,
      testPerClass: 100,
    },
    hiddenUnits: 12,
    epochs: 20,
    splitRatio: 0.8,
    seeds: [0],
    outputDir,
    activationStage: "post",
    ...overrides,
  };
}

describe("export", () => {
  it("writes four valid bundles per seed and trains above 70%", () => {
    const out = tmpDir();
    const result = exportSeed(smallConfig(out), 0);
    expect(result.validationAccuracy).toBeGreaterThan(0.7);
    for (const split of ["train", "validation", "holdout", "test"]) {
      const dir = result.bundleDirs[split];
      const manifest = JSON.parse(
        fs.readFileSync(path.join(dir, "manifest.json"), "utf-8"),
      );
      const names = manifest.tensors.map((t: { name: string }) => t.name);
      expect(names).toContain("activations");
      expect(names).toContain("weights");
      expect(names).toContain("biases");
      expect(names).toContain("labels");
      expect(names).toContain("logits");
      expect(manifest.metadata.activation_stage).toBe("post-activation");
      expect(manifest.metadata.split).toBe(split);
    }
  });

  it("exported logits reconstruct from activations, weights and biases", () => {
    const out = tmpDir();
    const result = exportSeed(smallConfig(out), 0);
    const dir = result.bundleDirs.test;
    const act = readPayload(dir, "activations", "f64") as Float64Array;
    const weights = readPayload(dir, "weights", "f64") as Float64Array;
    const biases = readPayload(dir, "biases", "f64") as Float64Array;
    const logits = readPayload(dir, "logits", "f64") as Float64Array;
    const h = 12;
    const k = 3;
    const n = act.length / h;
    let worst = 0;
    for (let i = 0; i < n; i++) {
      for (let c = 0; c < k; c++) {
        let z = biases[c];
        for (let j = 0; j < h; j++) z += act[i * h + j] * weights[c * h + j];
        worst = Math.max(worst, Math.abs(z - logits[i * k + c]));
      }
    }
    expect(worst).toBeLessThan(1e-3);
  });

  it("pre-activation mode stores raw values and omits logits", () => {
    const out = tmpDir();
    const result = exportSeed(smallConfig(out, { activationStage: "pre" }), 0);
    const dir = result.bundleDirs.validation;
    const manifest = JSON.parse(fs.readFileSync(path.join(dir, "manifest.json"), "utf-8"));
    const names = manifest.tensors.map((t: { name: string }) => t.name);
    expect(names).not.toContain("logits");
    expect(manifest.metadata.activation_stage).toBe("pre-activation");
    const act = readPayload(dir, "activations", "f64") as Float64Array;
    expect(Array.from(act).some((v) => v < 0)).toBe(true); // pre-ReLU goes negative
  });

  it("re-running a seed reproduces identical payload bytes", () => {
    const outA = tmpDir();
    const outB = tmpDir();
    exportSeed(smallConfig(outA), 0);
    exportSeed(smallConfig(outB), 0);
    for (const name of ["activations", "weights", "labels", "logits"]) {
      const a = fs.readFileSync(path.join(outA, "seed0", "test", `${name}.bin`));
      const b = fs.readFileSync(path.join(outB, "seed0", "test", `${name}.bin`));
      expect(a.equals(b)).toBe(true);
    }
  });

  it("two seeds produce distinct splits and weights", () => {
    const out = tmpDir();
    const results = runExport(smallConfig(out, { seeds: [0, 1] }));
    expect(results).toHaveLength(2);
    const w0 = readPayload(results[0].bundleDirs.test, "weights", "f64");
    const w1 = readPayload(results[1].bundleDirs.test, "weights", "f64");
    expect(Array.from(w0 as Float64Array)).not.toEqual(Array.from(w1 as Float64Array));
    const l0 = readPayload(results[0].bundleDirs.validation, "labels", "i64");
    const l1 = readPayload(results[1].bundleDirs.validation, "labels", "i64");
    expect(Array.from(l0 as BigInt64Array)).not.toEqual(Array.from(l1 as BigInt64Array));
  });

  it("rejects bad configs", () => {
    const out = tmpDir();
    expect(() => runExport(smallConfig(out, { splitRatio: 1.5 }))).toThrow(/splitRatio/);
    expect(() => runExport(smallConfig(out, { seeds: [] }))).toThrow(/seed/);
  });

  it("training divergence aborts before any bundle is written", () => {
    const out = tmpDir();
    const config = smallConfig(out, {
      train: { learningRate: 1e6 },  // guaranteed blow-up
      epochs: 5,
    });
    expect(() => runExport(config)).toThrow(/loss became/);
    expect(fs.existsSync(path.join(out, "seed0"))).toBe(false);
  });
});
