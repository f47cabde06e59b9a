/** Thin foreign-function layer over the sdrkit CLI so an external trainer
 * can minimize any of the L1-L11 losses without linking Python.
 *
 * Each call writes the sample arrays as float64 WAVs (lossless), invokes
 * `python -m sdrkit loss`, and parses the JSON record. Calls are synchronous
 * and blocking; configs are immutable after creation and calls carry no
 * hidden state, so interleaving handles is safe.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { writeWavFloat64 } from "./wav";

export type LossId =
  | "L1" | "L2" | "L3" | "L4" | "L5" | "L6"
  | "L7" | "L8" | "L9" | "L10" | "L11";

export const LOSS_IDS: readonly LossId[] = [
  "L1", "L2", "L3", "L4", "L5", "L6", "L7", "L8", "L9", "L10", "L11",
];

export interface LossParams {
  sampleRate?: number; // Hz of the shipped arrays (default 16000)
  stftSize?: number;
  hop?: number;
  melBands?: number;
  gamma?: number;
  clampDb?: readonly [number, number];
}

export interface BoundConfig {
  readonly id: LossId;
  readonly params: Required<LossParams>;
}

export type SampleArray = Float32Array | Float64Array;

/** Python interpreter used to reach the native library; override via
 * SDRKIT_PYTHON when the default `python3` is not the right environment. */
export function pythonExecutable(): string {
  return process.env.SDRKIT_PYTHON ?? "python3";
}

const handles = new Map<number, BoundConfig>();
let nextHandle = 1;

export function createConfig(id: LossId, params: LossParams = {}): number {
  if (!LOSS_IDS.includes(id)) {
    throw new Error(`unknown loss id ${id}`);
  }
  const full: Required<LossParams> = {
    sampleRate: params.sampleRate ?? 16000,
    stftSize: params.stftSize ?? 512,
    hop: params.hop ?? 256,
    melBands: params.melBands ?? 18,
    gamma: params.gamma ?? 0.2,
    clampDb: params.clampDb ?? [-60, 60],
  };
  const handle = nextHandle++;
  handles.set(handle, { id, params: full });
  return handle;
}

export function destroy(handle: number): void {
  if (!handles.delete(handle)) {
    throw new Error(`no such config handle: ${handle}`);
  }
}

export function getConfig(handle: number): BoundConfig {
  const cfg = handles.get(handle);
  if (!cfg) {
    throw new Error(`no such config handle: ${handle}`);
  }
  return cfg;
}

function toFloat64(name: string, x: SampleArray): Float64Array {
  if (x.length === 0) {
    throw new Error(`${name} is empty`);
  }
  for (let i = 0; i < x.length; i++) {
    if (!Number.isFinite(x[i])) {
      throw new Error(`${name} contains a non-finite value at index ${i}`);
    }
  }
  return x instanceof Float64Array ? x : Float64Array.from(x);
}

function checkShapes(est: SampleArray, clean: SampleArray, noise: SampleArray): void {
  if (est.length !== clean.length || est.length !== noise.length) {
    throw new Error(
      `shape mismatch: est ${est.length}, clean ${clean.length}, noise ${noise.length}`
    );
  }
}

interface LossRecord {
  id: string;
  value: number;
  gradient?: number[];
}

function invoke(
  cfg: BoundConfig,
  est: Float64Array,
  clean: Float64Array,
  noise: Float64Array,
  withGrad: boolean
): LossRecord {
  const dir = mkdtempSync(join(tmpdir(), "sdrkit-ffi-"));
  try {
    const paths = {
      est: join(dir, "est.wav"),
      clean: join(dir, "clean.wav"),
      noise: join(dir, "noise.wav"),
    };
    writeWavFloat64(paths.est, est, cfg.params.sampleRate);
    writeWavFloat64(paths.clean, clean, cfg.params.sampleRate);
    writeWavFloat64(paths.noise, noise, cfg.params.sampleRate);

    const argv = [
      "-m", "sdrkit", "loss",
      "--id", cfg.id,
      paths.est, paths.clean, paths.noise,
      "--stft-size", String(cfg.params.stftSize),
      "--hop", String(cfg.params.hop),
      "--mel-bands", String(cfg.params.melBands),
      "--gamma", String(cfg.params.gamma),
      // "=" form: a leading minus in the value would otherwise parse as a flag
      `--clamp-db=${cfg.params.clampDb[0]},${cfg.params.clampDb[1]}`,
    ];
    if (withGrad) {
      argv.push("--with-grad");
    }
    const proc = spawnSync(pythonExecutable(), argv, {
      encoding: "utf8",
      maxBuffer: 256 * 1024 * 1024,
    });
    if (proc.error) {
      throw proc.error;
    }
    if (proc.status !== 0) {
      let detail = proc.stdout.trim() || proc.stderr.trim();
      try {
        const record = JSON.parse(proc.stdout);
        detail = `${record.error.kind}: ${record.error.message}`;
      } catch {
        // keep raw output
      }
      throw new Error(`sdrkit loss failed (exit ${proc.status}): ${detail}`);
    }
    return JSON.parse(proc.stdout) as LossRecord;
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/** Loss value of one (est, clean, noise) triple; equals the native
 * loss evaluation on identical inputs. Float32 inputs are up-converted to
 * float64 before crossing the boundary. */
export function forward(
  handle: number,
  est: SampleArray,
  clean: SampleArray,
  noise: SampleArray
): number {
  const cfg = getConfig(handle);
  checkShapes(est, clean, noise);
  const record = invoke(
    cfg,
    toFloat64("est", est),
    toFloat64("clean", clean),
    toFloat64("noise", noise),
    false
  );
  return record.value;
}

/** Gradient of the loss w.r.t. est, in the caller's input precision.
 * The returned buffer is freshly allocated and owned by the caller. */
export function backward(
  handle: number,
  est: SampleArray,
  clean: SampleArray,
  noise: SampleArray
): SampleArray {
  const cfg = getConfig(handle);
  checkShapes(est, clean, noise);
  const record = invoke(
    cfg,
    toFloat64("est", est),
    toFloat64("clean", clean),
    toFloat64("noise", noise),
    true
  );
  if (!record.gradient) {
    throw new Error("native side returned no gradient");
  }
  const grad = Float64Array.from(record.gradient);
  return est instanceof Float32Array ? Float32Array.from(grad) : grad;
}
