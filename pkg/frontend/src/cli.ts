#!/usr/bin/env node
/**
 * Trainer command line.
 *
 *   stretchtomo-trainer train   --config train.json
 *   stretchtomo-trainer infer   --in x.stto --out y.stto --ckpt dir
 *   stretchtomo-trainer compare --config compare.json
 */
import * as fs from "node:fs";
import * as path from "node:path";
import { parseArgs } from "node:util";

import { initBackend } from "./backend.js";
import { CompareConfig, compareRepresentations, orderingCount } from "./compare.js";
import { DataConfig, Representation, generateDataset, inChannelsFor,
         inputNormFor } from "./data.js";
import { inferFile } from "./infer.js";
import { train } from "./train.js";
import { UNetConfig } from "./unet.js";

function fail(msg: string): never {
  console.error(`stretchtomo-trainer: ${msg}`);
  process.exit(2);
}

const DATA_DEFAULTS = {
  depth: 32, height: 64, width: 64, nViews: 8, angleMaxDeg: 60,
  noise: 0.3, misalign: 4, shiftRange: 3,
  phantomStyle: "cells" as const, phantomCells: 10,
  nTrain: 24, nVal: 6, cli: "stretchtomo",
};

async function cmdTrain(args: Record<string, string | undefined>) {
  if (!args.config) fail("train needs --config");
  const raw = JSON.parse(fs.readFileSync(args.config!, "utf-8"));
  const rep: Representation = raw.representation ?? "stretch";
  const outDir: string = args.out ?? raw.outDir ?? "train_run";
  fs.mkdirSync(outDir, { recursive: true });
  const dataCfg: DataConfig = {
    ...DATA_DEFAULTS, ...raw.data,
    seed: raw.seed ?? 0,
    cacheDir: raw.data?.cacheDir ?? path.join(outDir, "data"),
  };
  const model: UNetConfig = {
    inChannels: inChannelsFor(rep, dataCfg),
    outChannels: dataCfg.depth,
    levels: raw.model?.levels ?? 5,
    baseWidth: raw.model?.baseWidth ?? 8,
    seed: raw.seed ?? 0,
    inputNorm: inputNormFor(rep),
  };
  await initBackend();
  const dataset = generateDataset(dataCfg, rep);
  const res = train(model, dataset, {
    steps: raw.steps ?? 400,
    valEvery: raw.valEvery ?? 50,
    learningRate: raw.learningRate ?? 0.001,
    seed: (raw.seed ?? 0) * 7919 + 13,
    ckptDir: path.join(outDir, "best.ckpt"),
    curveFile: path.join(outDir, "curve.jsonl"),
  }, dataCfg.height, dataCfg.width);
  console.log(JSON.stringify({ representation: rep, bestVal: res.bestVal,
                               bestStep: res.bestStep }));
}

async function cmdInfer(args: Record<string, string | undefined>) {
  if (!args.in || !args.out || !args.ckpt) fail("infer needs --in, --out, --ckpt");
  await initBackend();
  inferFile(args.in!, args.out!, args.ckpt!);
}

async function cmdCompare(args: Record<string, string | undefined>) {
  if (!args.config) fail("compare needs --config");
  const raw = JSON.parse(fs.readFileSync(args.config!, "utf-8"));
  const cfg: CompareConfig = {
    representations: raw.representations ?? ["sinogram", "stretch", "bp", "fbp"],
    seeds: raw.seeds ?? [0, 1, 2],
    data: { ...DATA_DEFAULTS, ...raw.data },
    model: { levels: raw.model?.levels ?? 5, baseWidth: raw.model?.baseWidth ?? 8 },
    steps: raw.steps ?? 400,
    valEvery: raw.valEvery ?? 50,
    learningRate: raw.learningRate ?? 0.001,
    outDir: args.out ?? raw.outDir ?? "compare_run",
  };
  await initBackend();
  const rows = compareRepresentations(cfg);
  const table: Record<string, Record<string, number>> = {};
  for (const r of rows) {
    table[r.representation] ??= {};
    table[r.representation][`seed${r.seed}`] = r.bestVal;
  }
  const summary: Record<string, unknown> = { table };
  if (cfg.representations.includes("stretch") && cfg.representations.includes("sinogram")) {
    summary.stretch_below_sinogram = orderingCount(rows, "stretch", "sinogram");
  }
  console.log(JSON.stringify(summary, null, 2));
}

async function main() {
  const [, , command, ...rest] = process.argv;
  const { values } = parseArgs({
    args: rest,
    options: {
      config: { type: "string" },
      in: { type: "string" },
      out: { type: "string" },
      ckpt: { type: "string" },
    },
    strict: true,
  });
  const args = values as Record<string, string | undefined>;
  try {
    if (command === "train") await cmdTrain(args);
    else if (command === "infer") await cmdInfer(args);
    else if (command === "compare") await cmdCompare(args);
    else fail(`unknown command ${command ?? "(none)"}; use train|infer|compare`);
  } catch (err: any) {
    fail(err?.message ?? String(err));
  }
}

main();
