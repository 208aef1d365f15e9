/** Two-layer MLP (input -> hidden ReLU -> output) with manual backprop.
 *
 * The hidden layer is the "decision layer": its activations together with the
 * output weights and biases fully determine classification, and they are what
 * the exporter captures for every split.  Training is minibatch SGD with
 * momentum minimizing softmax cross-entropy.
 */

import { Dataset } from "./data.js";
import { Rng } from "./rng.js";

export class TrainingDivergence extends Error {}

export interface ForwardCapture {
  /** n x hidden, before ReLU */
  preActivations: Float64Array;
  /** n x hidden, after ReLU */
  activations: Float64Array;
  /** n x k */
  logits: Float64Array;
}

export interface TrainOptions {
  epochs: number;
  learningRate: number;
  momentum: number;
  batchSize: number;
}

export const DEFAULT_TRAIN: TrainOptions = {
  epochs: 30,
  learningRate: 0.05,
  momentum: 0.9,
  batchSize: 32,
};

export class Mlp {
  readonly w1: Float64Array; // hidden x d
  readonly b1: Float64Array; // hidden
  readonly w2: Float64Array; // k x hidden
  readonly b2: Float64Array; // k

  constructor(
    readonly d: number,
    readonly hidden: number,
    readonly k: number,
    rng: Rng,
  ) {
    const s1 = Math.sqrt(2 / d);
    const s2 = Math.sqrt(2 / hidden);
    this.w1 = new Float64Array(hidden * d).map(() => rng.gaussian() * s1);
    this.b1 = new Float64Array(hidden);
    this.w2 = new Float64Array(k * hidden).map(() => rng.gaussian() * s2);
    this.b2 = new Float64Array(k);
  }

  forward(features: Float64Array, n: number): ForwardCapture {
    const { d, hidden, k } = this;
    const pre = new Float64Array(n * hidden);
    const act = new Float64Array(n * hidden);
    const logits = new Float64Array(n * k);
    for (let i = 0; i < n; i++) {
      for (let h = 0; h < hidden; h++) {
        let z = this.b1[h];
        for (let j = 0; j < d; j++) z += this.w1[h * d + j] * features[i * d + j];
        pre[i * hidden + h] = z;
        act[i * hidden + h] = z > 0 ? z : 0;
      }
      for (let c = 0; c < k; c++) {
        let z = this.b2[c];
        for (let h = 0; h < hidden; h++) z += this.w2[c * hidden + h] * act[i * hidden + h];
        logits[i * k + c] = z;
      }
    }
    return { preActivations: pre, activations: act, logits };
  }

  accuracy(data: Dataset): number {
    const { logits } = this.forward(data.features, data.n);
    let hits = 0;
    for (let i = 0; i < data.n; i++) {
      let best = 0;
      for (let c = 1; c < this.k; c++) {
        if (logits[i * this.k + c] > logits[i * this.k + best]) best = c;
      }
      if (best === data.labels[i]) hits += 1;
    }
    return hits / data.n;
  }

  /** one SGD-with-momentum pass over the data; returns mean cross-entropy */
  private epoch(data: Dataset, opts: TrainOptions, rng: Rng, velocity: Float64Array[]): number {
    const { d, hidden, k } = this;
    const order = rng.shuffle([...Array(data.n).keys()]);
    const [vW1, vB1, vW2, vB2] = velocity;
    let totalLoss = 0;

    for (let start = 0; start < data.n; start += opts.batchSize) {
      const rows = order.slice(start, start + opts.batchSize);
      const m = rows.length;
      const gW1 = new Float64Array(hidden * d);
      const gB1 = new Float64Array(hidden);
      const gW2 = new Float64Array(k * hidden);
      const gB2 = new Float64Array(k);

      for (const r of rows) {
        const x = data.features.subarray(r * d, (r + 1) * d);
        const pre = new Float64Array(hidden);
        const act = new Float64Array(hidden);
        for (let h = 0; h < hidden; h++) {
          let z = this.b1[h];
          for (let j = 0; j < d; j++) z += this.w1[h * d + j] * x[j];
          pre[h] = z;
          act[h] = z > 0 ? z : 0;
        }
        const logits = new Float64Array(k);
        let maxLogit = -Infinity;
        for (let c = 0; c < k; c++) {
          let z = this.b2[c];
          for (let h = 0; h < hidden; h++) z += this.w2[c * hidden + h] * act[h];
          logits[c] = z;
          if (z > maxLogit) maxLogit = z;
        }
        let norm = 0;
        for (let c = 0; c < k; c++) norm += Math.exp(logits[c] - maxLogit);
        const y = data.labels[r];
        totalLoss += -(logits[y] - maxLogit - Math.log(norm));

        // d(loss)/d(logit) = softmax - onehot, averaged over the batch
        const dAct = new Float64Array(hidden);
        for (let c = 0; c < k; c++) {
          const p = Math.exp(logits[c] - maxLogit) / norm;
          const g = (p - (c === y ? 1 : 0)) / m;
          gB2[c] += g;
          for (let h = 0; h < hidden; h++) {
            gW2[c * hidden + h] += g * act[h];
            dAct[h] += g * this.w2[c * hidden + h];
          }
        }
        for (let h = 0; h < hidden; h++) {
          if (pre[h] <= 0) continue;
          gB1[h] += dAct[h];
          for (let j = 0; j < d; j++) gW1[h * d + j] += dAct[h] * x[j];
        }
      }

      const step = (p: Float64Array, g: Float64Array, v: Float64Array) => {
        for (let i = 0; i < p.length; i++) {
          v[i] = opts.momentum * v[i] - opts.learningRate * g[i];
          p[i] += v[i];
        }
      };
      step(this.w1, gW1, vW1);
      step(this.b1, gB1, vB1);
      step(this.w2, gW2, vW2);
      step(this.b2, gB2, vB2);
    }
    return totalLoss / data.n;
  }

  train(data: Dataset, opts: TrainOptions, rng: Rng): number[] {
    const velocity = [
      new Float64Array(this.w1.length),
      new Float64Array(this.b1.length),
      new Float64Array(this.w2.length),
      new Float64Array(this.b2.length),
    ];
    const losses: number[] = [];
    for (let e = 0; e < opts.epochs; e++) {
      const loss = this.epoch(data, opts, rng, velocity);
      if (!Number.isFinite(loss)) {
        throw new TrainingDivergence(`loss became ${loss} at epoch ${e}`);
      }
      losses.push(loss);
    }
    return losses;
  }
}
