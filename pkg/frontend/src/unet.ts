/**
 * 2-D U-Net over tilt-channel inputs.
 *
 * Structure: `levels` resolution levels with feature widths
 * baseWidth * 2^level (the full-size model uses baseWidth 64 and 5 levels,
 * i.e. 64..1024), two 3x3 same-padded convolutions per level, each followed
 * by instance normalization then ReLU, 2x2 max-pool down, nearest-neighbor
 * up + 3x3 conv with skip concatenation on the way back, and a final 1x1
 * projection to the output channels.  The output channel axis is the depth
 * axis of the reconstructed volume, so spatial size must be preserved
 * end to end (same padding everywhere).
 */
import * as tf from "@tensorflow/tfjs";
import * as fs from "node:fs";
import * as path from "node:path";

export interface UNetConfig {
  inChannels: number;
  outChannels: number;
  levels: number;
  baseWidth: number;
  seed: number;
  /** "global" -> zero-mean/unit-var the input at inference; "none" otherwise */
  inputNorm: "global" | "none";
}

export const IN_EPSILON = 1e-5;

export type ParamMap = Record<string, tf.Tensor>;

function width(cfg: UNetConfig, level: number): number {
  return cfg.baseWidth * 2 ** level;
}

interface ConvSpec {
  name: string;
  kh: number;
  kw: number;
  cin: number;
  cout: number;
  normed: boolean; // followed by instance norm (+ its gamma/beta params)
}

export function convSpecs(cfg: UNetConfig): ConvSpec[] {
  const specs: ConvSpec[] = [];
  const pair = (name: string, cin: number, cout: number) => {
    specs.push({ name: `${name}_conv1`, kh: 3, kw: 3, cin, cout, normed: true });
    specs.push({ name: `${name}_conv2`, kh: 3, kw: 3, cin: cout, cout, normed: true });
  };
  for (let l = 0; l < cfg.levels; l++) {
    pair(`enc${l}`, l === 0 ? cfg.inChannels : width(cfg, l - 1), width(cfg, l));
  }
  for (let l = cfg.levels - 2; l >= 0; l--) {
    pair(`dec${l}`, width(cfg, l + 1) + width(cfg, l), width(cfg, l));
  }
  specs.push({
    name: "final", kh: 1, kw: 1, cin: width(cfg, 0), cout: cfg.outChannels,
    normed: false,
  });
  return specs;
}

export function paramOrder(cfg: UNetConfig): string[] {
  const names: string[] = [];
  for (const s of convSpecs(cfg)) {
    names.push(`${s.name}_w`);
    if (s.normed) {
      names.push(`${s.name}_gamma`, `${s.name}_beta`);
    } else {
      names.push(`${s.name}_b`);
    }
  }
  return names;
}

/** He-normal conv kernels, unit gamma, zero beta/bias; seeded. */
export function initParams(cfg: UNetConfig): Record<string, tf.Variable> {
  const params: Record<string, tf.Variable> = {};
  let seed = cfg.seed;
  for (const s of convSpecs(cfg)) {
    const fanIn = s.kh * s.kw * s.cin;
    seed += 1;
    const w = tf.randomNormal([s.kh, s.kw, s.cin, s.cout], 0,
                              Math.sqrt(2 / fanIn), "float32", seed);
    params[`${s.name}_w`] = tf.variable(w, true, `${s.name}_w`);
    if (s.normed) {
      params[`${s.name}_gamma`] = tf.variable(tf.ones([s.cout]), true, `${s.name}_gamma`);
      params[`${s.name}_beta`] = tf.variable(tf.zeros([s.cout]), true, `${s.name}_beta`);
    } else {
      params[`${s.name}_b`] = tf.variable(tf.zeros([s.cout]), true, `${s.name}_b`);
    }
  }
  return params;
}

function instanceNorm(x: tf.Tensor4D, gamma: tf.Tensor, beta: tf.Tensor): tf.Tensor4D {
  const { mean, variance } = tf.moments(x, [1, 2], true);
  const inv = tf.rsqrt(tf.add(variance, IN_EPSILON));
  return tf.add(tf.mul(tf.mul(tf.sub(x, mean), inv), gamma), beta) as tf.Tensor4D;
}

/**
 * Same-padded convolution via im2col + matMul.  Every op in the chain
 * (pad, slice, concat, reshape, matMul) has forward and gradient kernels on
 * the wasm backend, unlike Conv2DBackpropFilter, so training works there.
 * Kernels are stored [kh, kw, cin, cout], the usual HWIO layout.
 */
function convSame(x: tf.Tensor4D, kernel: tf.Tensor4D): tf.Tensor4D {
  const [b, h, w, cin] = x.shape;
  const [kh, kw, , cout] = kernel.shape;
  if (kh === 1 && kw === 1) {
    const flat = x.reshape([b * h * w, cin]);
    return tf.matMul(flat, kernel.reshape([cin, cout]))
      .reshape([b, h, w, cout]) as tf.Tensor4D;
  }
  const ph = (kh - 1) / 2;
  const pw = (kw - 1) / 2;
  const padded = tf.pad(x, [[0, 0], [ph, ph], [pw, pw], [0, 0]]);
  const patches: tf.Tensor4D[] = [];
  for (let dy = 0; dy < kh; dy++) {
    for (let dx = 0; dx < kw; dx++) {
      patches.push(tf.slice(padded, [0, dy, dx, 0], [b, h, w, cin]) as tf.Tensor4D);
    }
  }
  const cols = tf.concat(patches, 3).reshape([b * h * w, kh * kw * cin]);
  return tf.matMul(cols, kernel.reshape([kh * kw * cin, cout]))
    .reshape([b, h, w, cout]) as tf.Tensor4D;
}

/** 2x2 stride-2 max pooling via reshape + per-axis max (wasm-safe grads) */
function maxPool2(x: tf.Tensor4D): tf.Tensor4D {
  const [b, h, w, c] = x.shape;
  const blocks = x.reshape([b, h / 2, 2, w / 2, 2, c]);
  return tf.max(tf.max(blocks, 4), 2) as tf.Tensor4D;
}

function convBlock(x: tf.Tensor4D, p: ParamMap, name: string): tf.Tensor4D {
  const y = convSame(x, p[`${name}_w`] as tf.Tensor4D);
  return tf.relu(instanceNorm(y, p[`${name}_gamma`], p[`${name}_beta`]));
}

/**
 * Nearest-neighbor 2x upsample via concat+reshape, which keeps every
 * intermediate at rank <= 4 so gradients exist on all backends.
 * Duplicating along an axis: [.., n, rest] -> concat on rest -> [.., 2n, rest].
 */
function upsample2(x: tf.Tensor4D): tf.Tensor4D {
  const [b, h, w, c] = x.shape;
  const wideC = tf.concat([x, x], 3).reshape([b, h, 2 * w, c]);
  const rows = wideC.reshape([b, h, 2 * w * c]);
  return tf.concat([rows, rows], 2).reshape([b, 2 * h, 2 * w, c]) as tf.Tensor4D;
}

/** x: [1, H, W, inChannels] -> [1, H, W, outChannels]; H, W divisible by 2^(levels-1) */
export function forward(cfg: UNetConfig, p: ParamMap, x: tf.Tensor4D): tf.Tensor4D {
  const [, h, w, c] = x.shape;
  if (c !== cfg.inChannels) {
    throw new Error(`channel mismatch: input has ${c}, model expects ${cfg.inChannels}`);
  }
  const stride = 2 ** (cfg.levels - 1);
  if (h % stride !== 0 || w % stride !== 0) {
    throw new Error(`spatial dims ${h}x${w} not divisible by ${stride}`);
  }
  const skips: tf.Tensor4D[] = [];
  let cur = x;
  for (let l = 0; l < cfg.levels; l++) {
    cur = convBlock(convBlock(cur, p, `enc${l}_conv1`), p, `enc${l}_conv2`);
    if (l < cfg.levels - 1) {
      skips.push(cur);
      cur = maxPool2(cur);
    }
  }
  for (let l = cfg.levels - 2; l >= 0; l--) {
    cur = tf.concat([upsample2(cur), skips[l]], 3) as tf.Tensor4D;
    cur = convBlock(convBlock(cur, p, `dec${l}_conv1`), p, `dec${l}_conv2`);
  }
  const out = tf.add(
    convSame(cur, p["final_w"] as tf.Tensor4D),
    p["final_b"],
  ) as tf.Tensor4D;
  return out;
}

export interface CheckpointExtra {
  [key: string]: unknown;
}

export function saveCheckpoint(dir: string, cfg: UNetConfig, p: ParamMap,
                               extra: CheckpointExtra = {}): void {
  const tmp = `${dir}.tmp-${process.pid}`;
  fs.mkdirSync(tmp, { recursive: true });
  const names = paramOrder(cfg);
  const entries: { name: string; shape: number[]; offset: number; length: number }[] = [];
  let total = 0;
  const chunks: Float32Array[] = [];
  for (const name of names) {
    const t = p[name];
    const data = t.dataSync() as Float32Array;
    entries.push({ name, shape: t.shape.slice(), offset: total, length: data.length });
    chunks.push(data);
    total += data.length;
  }
  const weights = Buffer.alloc(4 * total);
  let cursor = 0;
  for (const chunk of chunks) {
    for (let i = 0; i < chunk.length; i++) weights.writeFloatLE(chunk[i], cursor + 4 * i);
    cursor += 4 * chunk.length;
  }
  fs.writeFileSync(path.join(tmp, "weights.bin"), weights);
  fs.writeFileSync(path.join(tmp, "manifest.json"), JSON.stringify({
    format: "stretchtomo-trainer-ckpt",
    version: 1,
    config: cfg,
    params: entries,
    extra,
  }, null, 2) + "\n");
  fs.rmSync(dir, { recursive: true, force: true });
  fs.renameSync(tmp, dir);
}

export function loadCheckpoint(dir: string): {
  cfg: UNetConfig; params: ParamMap; extra: CheckpointExtra;
} {
  const manifest = JSON.parse(
    fs.readFileSync(path.join(dir, "manifest.json"), "utf-8"));
  if (manifest.version !== 1) {
    throw new Error(`unsupported checkpoint version ${manifest.version}`);
  }
  const buf = fs.readFileSync(path.join(dir, "weights.bin"));
  const params: ParamMap = {};
  for (const e of manifest.params) {
    const data = new Float32Array(e.length);
    for (let i = 0; i < e.length; i++) data[i] = buf.readFloatLE(4 * (e.offset + i));
    params[e.name] = tf.tensor(data, e.shape);
  }
  return { cfg: manifest.config as UNetConfig, params, extra: manifest.extra ?? {} };
}
