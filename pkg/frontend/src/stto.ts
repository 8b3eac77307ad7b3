/**
 * STTO tensor file interop (little-endian float32 payload).
 *
 * Layout: "STTO" magic, u32 version (1), u32 dtype code (1 = f32le),
 * u32 rank, u32 per dim, then the row-major payload.  A tilt stack carries
 * a JSON sidecar at `${path}.json` with angles_deg / kind / tilt_axis.
 */
import * as fs from "node:fs";

export interface StackMeta {
  angles_deg: number[];
  kind: string;
  tilt_axis: string;
}

export interface SttoTensor {
  /** row-major values, dims[0] slowest */
  data: Float32Array;
  dims: number[];
  /** present iff the file had a sidecar (i.e. it is a tilt stack) */
  meta?: StackMeta;
}

const MAGIC = "STTO";
const VERSION = 1;
const DTYPE_F32 = 1;

export function readStto(path: string): SttoTensor {
  const buf = fs.readFileSync(path);
  if (buf.length < 16) throw new Error(`${path}: truncated header`);
  if (buf.toString("latin1", 0, 4) !== MAGIC) {
    throw new Error(`${path}: bad magic`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) throw new Error(`${path}: unsupported version ${version}`);
  const dtype = buf.readUInt32LE(8);
  if (dtype !== DTYPE_F32) throw new Error(`${path}: unsupported dtype ${dtype}`);
  const rank = buf.readUInt32LE(12);
  const dims: number[] = [];
  for (let i = 0; i < rank; i++) dims.push(buf.readUInt32LE(16 + 4 * i));
  const offset = 16 + 4 * rank;
  const count = dims.reduce((a, b) => a * b, 1);
  if (buf.length - offset !== 4 * count) {
    throw new Error(`${path}: payload length mismatch`);
  }
  // copy into an aligned buffer; Buffer pooling does not guarantee alignment
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) data[i] = buf.readFloatLE(offset + 4 * i);

  const sidecar = `${path}.json`;
  let meta: StackMeta | undefined;
  if (fs.existsSync(sidecar)) {
    meta = JSON.parse(fs.readFileSync(sidecar, "utf-8")) as StackMeta;
  }
  return { data, dims, meta };
}

export function writeStto(path: string, t: SttoTensor): void {
  const count = t.dims.reduce((a, b) => a * b, 1);
  if (count !== t.data.length) throw new Error("dims do not match data length");
  for (const v of t.data) {
    if (!Number.isFinite(v)) throw new Error("refusing to write non-finite values");
  }
  const header = Buffer.alloc(16 + 4 * t.dims.length);
  header.write(MAGIC, 0, "latin1");
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(DTYPE_F32, 8);
  header.writeUInt32LE(t.dims.length, 12);
  t.dims.forEach((d, i) => header.writeUInt32LE(d, 16 + 4 * i));
  const payload = Buffer.alloc(4 * count);
  for (let i = 0; i < count; i++) payload.writeFloatLE(t.data[i], 4 * i);
  fs.writeFileSync(path, Buffer.concat([header, payload]));
  if (t.meta) {
    fs.writeFileSync(`${path}.json`, JSON.stringify(t.meta, null, 2) + "\n");
  }
}

/** (C, H, W) row-major -> (H, W, C) row-major */
export function chwToHwc(data: Float32Array, c: number, h: number, w: number): Float32Array {
  const out = new Float32Array(data.length);
  for (let ci = 0; ci < c; ci++) {
    for (let yi = 0; yi < h; yi++) {
      for (let xi = 0; xi < w; xi++) {
        out[(yi * w + xi) * c + ci] = data[(ci * h + yi) * w + xi];
      }
    }
  }
  return out;
}

/** (H, W, C) row-major -> (C, H, W) row-major */
export function hwcToChw(data: Float32Array, h: number, w: number, c: number): Float32Array {
  const out = new Float32Array(data.length);
  for (let yi = 0; yi < h; yi++) {
    for (let xi = 0; xi < w; xi++) {
      for (let ci = 0; ci < c; ci++) {
        out[(ci * h + yi) * w + xi] = data[(yi * w + xi) * c + ci];
      }
    }
  }
  return out;
}

/** zero-mean, unit population variance; constant input comes back as zeros */
export function normalizeF32(data: Float32Array): Float32Array {
  let sum = 0;
  for (const v of data) sum += v;
  const mean = sum / data.length;
  let ss = 0;
  for (const v of data) ss += (v - mean) * (v - mean);
  const variance = ss / data.length;
  const out = new Float32Array(data.length);
  if (variance < 1e-12) return out;
  const inv = 1.0 / Math.sqrt(variance);
  for (let i = 0; i < data.length; i++) out[i] = (data[i] - mean) * inv;
  return out;
}

/** mean squared difference with float64 accumulation */
export function mseF64(a: Float32Array, b: Float32Array): number {
  if (a.length !== b.length) throw new Error("length mismatch");
  let ss = 0;
  for (let i = 0; i < a.length; i++) {
    const d = a[i] - b[i];
    ss += d * d;
  }
  return ss / a.length;
}
