/**
 * Training loop: Adam at the configured step size, batch size 1, MSE
 * between the network's volume and the ground truth, validation at a fixed
 * cadence, and early stopping by keeping a snapshot of the weights whose
 * validation loss is the minimum of the logged curve.
 *
 * Logged losses (and the early-stopping statistic) are computed with
 * float64 accumulation from the network outputs, so they agree with the
 * evaluation pipeline's MSE to rounding.
 */
import * as fs from "node:fs";
import * as tf from "@tensorflow/tfjs";

import { Sample } from "./data.js";
import { mseF64 } from "./stto.js";
import { ParamMap, UNetConfig, forward, initParams, saveCheckpoint } from "./unet.js";

export interface TrainOptions {
  steps: number;
  valEvery: number;
  learningRate: number; // 0.001 unless experimenting
  seed: number;
  ckptDir?: string;
  curveFile?: string;
  quiet?: boolean;
}

export interface TrainResult {
  bestVal: number;
  bestStep: number;
  curve: { step: number; trainLoss: number; valLoss: number }[];
  firstTrainLoss: number;
  lastTrainLoss: number;
}

/** deterministic small PRNG for sample ordering */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0; a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function toTensors(s: Sample, h: number, w: number): { x: tf.Tensor4D; t: tf.Tensor4D } {
  return {
    x: tf.tensor4d(s.input, [1, h, w, s.inChannels]),
    t: tf.tensor4d(s.target, [1, h, w, s.target.length / (h * w)]),
  };
}

/** float64-accumulated MSE of the model on one sample */
export function sampleLoss(cfg: UNetConfig, params: ParamMap, s: Sample,
                           h: number, w: number): number {
  return tf.tidy(() => {
    const { x, t } = toTensors(s, h, w);
    const pred = forward(cfg, params, x);
    const loss = mseF64(pred.dataSync() as Float32Array, t.dataSync() as Float32Array);
    return loss;
  });
}

export function meanValLoss(cfg: UNetConfig, params: ParamMap, val: Sample[],
                            h: number, w: number): number {
  let total = 0;
  for (const s of val) total += sampleLoss(cfg, params, s, h, w);
  return total / val.length;
}

export function train(cfg: UNetConfig, data: { train: Sample[]; val: Sample[] },
                      opts: TrainOptions, h: number, w: number): TrainResult {
  const params = initParams(cfg);
  const varList = Object.values(params);
  const optimizer = tf.train.adam(opts.learningRate);
  const rng = mulberry32(opts.seed);
  const curve: TrainResult["curve"] = [];
  const curveLines: string[] = [];

  let bestVal = Infinity;
  let bestStep = -1;
  let bestSnapshot: Record<string, Float32Array> | null = null;
  let firstTrainLoss = NaN;
  let lastTrainLoss = NaN;

  const snapshot = () => {
    const snap: Record<string, Float32Array> = {};
    for (const [name, v] of Object.entries(params)) {
      snap[name] = new Float32Array(v.dataSync() as Float32Array);
    }
    return snap;
  };

  for (let step = 1; step <= opts.steps; step++) {
    const s = data.train[Math.floor(rng() * data.train.length)];
    const { x, t } = toTensors(s, h, w);
    const lossT = optimizer.minimize(
      () => tf.mean(tf.squaredDifference(forward(cfg, params, x), t)) as tf.Scalar,
      true, varList as tf.Variable[]);
    const trainLoss = (lossT!.dataSync() as Float32Array)[0];
    lossT!.dispose(); x.dispose(); t.dispose();
    if (step === 1) firstTrainLoss = trainLoss;
    lastTrainLoss = trainLoss;

    if (step % opts.valEvery === 0 || step === opts.steps) {
      const valLoss = meanValLoss(cfg, params, data.val, h, w);
      curve.push({ step, trainLoss, valLoss });
      curveLines.push(JSON.stringify({ step, train_loss: trainLoss, val_loss: valLoss }));
      if (valLoss < bestVal) {
        bestVal = valLoss;
        bestStep = step;
        bestSnapshot = snapshot();
      }
      if (!opts.quiet) {
        console.error(`step ${step}/${opts.steps} train ${trainLoss.toFixed(5)} `
          + `val ${valLoss.toFixed(5)} best ${bestVal.toFixed(5)}@${bestStep}`);
      }
    }
  }

  if (bestSnapshot) {
    for (const [name, v] of Object.entries(params)) {
      (v as tf.Variable).assign(tf.tensor(bestSnapshot[name], v.shape));
    }
  }
  if (opts.curveFile) fs.writeFileSync(opts.curveFile, curveLines.join("\n") + "\n");
  if (opts.ckptDir) {
    saveCheckpoint(opts.ckptDir, cfg, params, { bestVal, bestStep });
  }
  const result: TrainResult = { bestVal, bestStep, curve, firstTrainLoss, lastTrainLoss };
  optimizer.dispose();
  return result;
}
