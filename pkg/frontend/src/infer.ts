/**
 * Inference over STTO files: the contract the evaluation sweep drives as a
 * subprocess (`stretchtomo-trainer infer --in x.stto --out y.stto --ckpt d`).
 */
import * as tf from "@tensorflow/tfjs";

import { chwToHwc, hwcToChw, normalizeF32, readStto, writeStto } from "./stto.js";
import { ParamMap, UNetConfig, forward, loadCheckpoint } from "./unet.js";

export function inferChw(cfg: UNetConfig, params: ParamMap,
                         chw: Float32Array, dims: number[]): {
  data: Float32Array; dims: number[];
} {
  const [c, h, w] = dims;
  if (c !== cfg.inChannels) {
    throw new Error(`channel mismatch: input has ${c} channels, `
      + `checkpoint expects ${cfg.inChannels}`);
  }
  const input = cfg.inputNorm === "global" ? normalizeF32(chw) : chw;
  const out = tf.tidy(() => {
    const x = tf.tensor4d(chwToHwc(input, c, h, w), [1, h, w, c]);
    const y = forward(cfg, params, x);
    return y.dataSync() as Float32Array;
  });
  return { data: hwcToChw(out, h, w, cfg.outChannels), dims: [cfg.outChannels, h, w] };
}

export function inferFile(inPath: string, outPath: string, ckptDir: string): void {
  const { cfg, params } = loadCheckpoint(ckptDir);
  const t = readStto(inPath);
  if (t.dims.length !== 3) throw new Error(`${inPath}: expected a rank-3 tensor`);
  const vol = inferChw(cfg, params, t.data, t.dims);
  writeStto(outPath, { data: vol.data, dims: vol.dims });
  for (const p of Object.values(params)) p.dispose();
}
