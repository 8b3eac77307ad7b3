/**
 * Training data generation.
 *
 * Every operator (phantom synthesis, projection, augmentation, stretching,
 * BP/FBP) is delegated to the `stretchtomo` CLI so there is exactly one
 * implementation of the physics; this module only shells out, caches the
 * resulting STTO files, and reshapes them into network tensors.  All four
 * network input representations are derived from the *same* augmented
 * stack per sample, so representation comparisons see identical data.
 */
import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";

import { chwToHwc, normalizeF32, readStto } from "./stto.js";

export type Representation = "sinogram" | "stretch" | "bp" | "fbp";

export interface DataConfig {
  depth: number;        // n_d: target channels
  height: number;
  width: number;
  nViews: number;
  angleMaxDeg: number;  // views span [-angleMaxDeg, +angleMaxDeg] inclusive
  noise: number;
  misalign: number;
  shiftRange: number;
  phantomStyle: "cells" | "blobs";
  phantomCells: number;
  nTrain: number;
  nVal: number;
  seed: number;
  cacheDir: string;
  cli: string;          // usually "stretchtomo"
}

export interface Sample {
  /** network input, HWC row-major */
  input: Float32Array;
  inChannels: number;
  /** target volume, HWC row-major with depth as channels */
  target: Float32Array;
}

function run(cli: string, args: string[]): void {
  try {
    execFileSync(cli, args, { stdio: ["ignore", "ignore", "pipe"] });
  } catch (err: any) {
    const stderr = err.stderr ? err.stderr.toString() : String(err);
    throw new Error(`${cli} ${args.join(" ")} failed: ${stderr}`);
  }
}

/** inputs for bp/fbp are whole-volume normalized before entering the net */
export function inputNormFor(rep: Representation): "global" | "none" {
  return rep === "bp" || rep === "fbp" ? "global" : "none";
}

export function inChannelsFor(rep: Representation, cfg: DataConfig): number {
  return rep === "bp" || rep === "fbp" ? cfg.depth : cfg.nViews;
}

function ensureSampleFiles(cfg: DataConfig, tag: string, sampleSeed: number): void {
  const d = cfg.cacheDir;
  fs.mkdirSync(d, { recursive: true });
  const gt = path.join(d, `${tag}_gt.stto`);
  const sino = path.join(d, `${tag}_sino.stto`);
  const aug = path.join(d, `${tag}_aug.stto`);
  const angles = `${-cfg.angleMaxDeg}:${cfg.angleMaxDeg}:${cfg.nViews}`;
  if (!fs.existsSync(gt)) {
    run(cfg.cli, ["phantom", "--style", cfg.phantomStyle,
      "--dims", `${cfg.depth},${cfg.height},${cfg.width}`,
      "--cells", String(cfg.phantomCells), "--seed", String(sampleSeed),
      "--out", gt]);
  }
  if (!fs.existsSync(sino)) {
    run(cfg.cli, ["project", "--in", gt, "--out", sino, `--angles=${angles}`]);
  }
  if (!fs.existsSync(aug)) {
    run(cfg.cli, ["augment", "--in", sino, "--out", aug,
      "--noise", String(cfg.noise), "--misalign", String(cfg.misalign),
      "--shift-range", String(cfg.shiftRange), "--seed", String(sampleSeed)]);
  }
}

function ensureRepresentation(cfg: DataConfig, tag: string, rep: Representation): string {
  const d = cfg.cacheDir;
  const aug = path.join(d, `${tag}_aug.stto`);
  if (rep === "sinogram") return aug;
  const out = path.join(d, `${tag}_${rep}.stto`);
  if (fs.existsSync(out)) return out;
  if (rep === "stretch") {
    run(cfg.cli, ["stretch", "--in", aug, "--out", out, "--direction", "magnify"]);
  } else {
    run(cfg.cli, [rep, "--in", aug, "--out", out, "--depth", String(cfg.depth)]);
  }
  return out;
}

function loadSample(cfg: DataConfig, tag: string, rep: Representation): Sample {
  const reprPath = ensureRepresentation(cfg, tag, rep);
  const repr = readStto(reprPath);
  const [c, h, w] = repr.dims;
  let chw = repr.data;
  if (inputNormFor(rep) === "global") chw = normalizeF32(chw);
  const input = chwToHwc(chw, c, h, w);

  const gt = readStto(path.join(cfg.cacheDir, `${tag}_gt.stto`));
  const target = chwToHwc(gt.data, gt.dims[0], gt.dims[1], gt.dims[2]);
  return { input, inChannels: c, target };
}

function sampleSeed(cfg: DataConfig, split: "train" | "val", index: number): number {
  const offset = split === "val" ? 500_000 : 0;
  return cfg.seed * 1_000_000 + offset + index;
}

export function generateDataset(cfg: DataConfig, rep: Representation): {
  train: Sample[]; val: Sample[];
} {
  const load = (split: "train" | "val", n: number) => {
    const out: Sample[] = [];
    for (let i = 0; i < n; i++) {
      const seed = sampleSeed(cfg, split, i);
      const tag = `s${seed}`;
      ensureSampleFiles(cfg, tag, seed);
      out.push(loadSample(cfg, tag, rep));
    }
    return out;
  };
  return { train: load("train", cfg.nTrain), val: load("val", cfg.nVal) };
}
