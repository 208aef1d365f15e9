/** Synthetic desk-scale datasets: Gaussian blobs with configurable overlap. */

import { Rng } from "./rng.js";

export interface Dataset {
  /** row-major n x d feature matrix */
  features: Float64Array;
  labels: Int32Array;
  n: number;
  d: number;
  k: number;
}

export interface BlobParams {
  nClasses: number;
  nFeatures: number;
  separation: number;
  noise: number;
}

export class BlobGenerator {
  private readonly centers: Float64Array;

  constructor(private readonly params: BlobParams, rng: Rng) {
    const { nClasses, nFeatures, separation } = params;
    this.centers = new Float64Array(nClasses * nFeatures);
    for (let c = 0; c < nClasses; c++) {
      let norm = 0;
      const row = new Float64Array(nFeatures);
      for (let j = 0; j < nFeatures; j++) {
        row[j] = rng.gaussian();
        norm += row[j] * row[j];
      }
      norm = Math.sqrt(norm);
      for (let j = 0; j < nFeatures; j++) {
        this.centers[c * nFeatures + j] = (row[j] / norm) * separation;
      }
    }
  }

  /** balanced draw: perClass samples per class, shuffled */
  draw(perClass: number, rng: Rng): Dataset {
    const { nClasses, nFeatures, noise } = this.params;
    const n = perClass * nClasses;
    const order: number[] = [];
    for (let c = 0; c < nClasses; c++) {
      for (let i = 0; i < perClass; i++) order.push(c);
    }
    rng.shuffle(order);
    const features = new Float64Array(n * nFeatures);
    const labels = new Int32Array(n);
    for (let i = 0; i < n; i++) {
      const c = order[i];
      labels[i] = c;
      for (let j = 0; j < nFeatures; j++) {
        features[i * nFeatures + j] =
          this.centers[c * nFeatures + j] + noise * rng.gaussian();
      }
    }
    return { features, labels, n, d: nFeatures, k: nClasses };
  }
}

/** split a dataset row-wise: first ratio fraction to train, rest to validation */
export function splitDataset(data: Dataset, ratio: number, rng: Rng): [Dataset, Dataset] {
  if (!(ratio > 0 && ratio < 1)) {
    throw new Error(`split ratio must lie in (0, 1), got ${ratio}`);
  }
  const idx = rng.shuffle([...Array(data.n).keys()]);
  const nTrain = Math.round(data.n * ratio);
  const pick = (rows: number[]): Dataset => {
    const features = new Float64Array(rows.length * data.d);
    const labels = new Int32Array(rows.length);
    rows.forEach((r, i) => {
      features.set(data.features.subarray(r * data.d, (r + 1) * data.d), i * data.d);
      labels[i] = data.labels[r];
    });
    return { features, labels, n: rows.length, d: data.d, k: data.k };
  };
  return [pick(idx.slice(0, nTrain)), pick(idx.slice(nTrain))];
}
