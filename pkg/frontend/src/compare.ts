/**
 * Representation comparison: train one small model per input representation
 * on identical seeded data and report the validation-best MSE of each.
 */
import * as fs from "node:fs";
import * as path from "node:path";

import { DataConfig, Representation, generateDataset, inChannelsFor,
         inputNormFor } from "./data.js";
import { TrainOptions, train } from "./train.js";
import { UNetConfig } from "./unet.js";

export interface CompareConfig {
  representations: Representation[];
  seeds: number[];
  data: Omit<DataConfig, "seed" | "cacheDir"> & { cacheDir?: string };
  model: { levels: number; baseWidth: number };
  steps: number;
  valEvery: number;
  learningRate: number;
  outDir: string;
  quiet?: boolean;
}

export interface CompareRow {
  representation: Representation;
  seed: number;
  bestVal: number;
  bestStep: number;
}

export function compareRepresentations(cfg: CompareConfig): CompareRow[] {
  const rows: CompareRow[] = [];
  fs.mkdirSync(cfg.outDir, { recursive: true });
  for (const seed of cfg.seeds) {
    const dataCfg: DataConfig = {
      ...cfg.data,
      seed,
      cacheDir: cfg.data.cacheDir ?? path.join(cfg.outDir, `data_seed${seed}`),
    };
    for (const rep of cfg.representations) {
      const dataset = generateDataset(dataCfg, rep);
      const model: UNetConfig = {
        inChannels: inChannelsFor(rep, dataCfg),
        outChannels: dataCfg.depth,
        levels: cfg.model.levels,
        baseWidth: cfg.model.baseWidth,
        seed,
        inputNorm: inputNormFor(rep),
      };
      const opts: TrainOptions = {
        steps: cfg.steps,
        valEvery: cfg.valEvery,
        learningRate: cfg.learningRate,
        seed: seed * 7919 + 13,
        ckptDir: path.join(cfg.outDir, `${rep}_seed${seed}.ckpt`),
        curveFile: path.join(cfg.outDir, `${rep}_seed${seed}.curve.jsonl`),
        quiet: cfg.quiet,
      };
      const res = train(model, dataset, opts, dataCfg.height, dataCfg.width);
      rows.push({ representation: rep, seed, bestVal: res.bestVal,
                  bestStep: res.bestStep });
      if (!cfg.quiet) {
        console.error(`[compare] ${rep} seed ${seed}: best val `
          + `${res.bestVal.toFixed(5)} @ step ${res.bestStep}`);
      }
    }
  }
  fs.writeFileSync(path.join(cfg.outDir, "results.json"),
                   JSON.stringify(rows, null, 2) + "\n");
  return rows;
}

/** how many seeds put `a` strictly below `b` */
export function orderingCount(rows: CompareRow[], a: Representation,
                              b: Representation): { wins: number; total: number } {
  const seeds = [...new Set(rows.map((r) => r.seed))];
  let wins = 0;
  for (const seed of seeds) {
    const va = rows.find((r) => r.seed === seed && r.representation === a);
    const vb = rows.find((r) => r.seed === seed && r.representation === b);
    if (va && vb && va.bestVal < vb.bestVal) wins++;
  }
  return { wins, total: seeds.length };
}
