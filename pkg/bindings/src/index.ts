/**
 * index.ts — typed-array bindings for the uhreval numeric kernels.
 *
 * Exposes the four hot kernels (patch texture score, JPEG compression
 * ratio, Haar wavelet forward/inverse, wavelet-domain velocity loss) to
 * JavaScript/TypeScript callers. Work is delegated to the core package
 * through its `kernel` CLI endpoint (JSON over stdio), so results are
 * identical to the core library by construction.
 *
 * Configure the interpreter via UHREVAL_CLI (default "python3 -m uhreval").
 */

import { spawnSync } from "node:child_process";

/** Mirrors the core library version. */
export const VERSION = "0.1.0";

const MAX_BUFFER = 256 * 1024 * 1024;

export type Subsampling = "4:4:4" | "4:2:0";

export interface TensorDims {
  channels: number;
  height: number;
  width: number;
}

/** The four half-resolution sub-bands of one wavelet level. */
export interface SubbandSet extends TensorDims {
  ll: Float64Array;
  lh: Float64Array;
  hl: Float64Array;
  hh: Float64Array;
}

export interface CompressionOptions {
  quality?: number;
  subsampling?: Subsampling;
}

export interface WlfOptions {
  wT?: number;
  /** Per-band weights in (ll, lh, hl, hh) order; defaults to uniform. */
  subbandWeights?: [number, number, number, number];
}

function cliCommand(): string[] {
  const override = process.env.UHREVAL_CLI;
  if (override && override.trim().length > 0) {
    return override.trim().split(/\s+/);
  }
  return ["python3", "-m", "uhreval"];
}

function runCli(args: string[], input?: string): string {
  const [cmd, ...base] = cliCommand();
  const result = spawnSync(cmd, [...base, ...args], {
    input,
    encoding: "utf8",
    maxBuffer: MAX_BUFFER,
  });
  if (result.error) {
    throw new Error(`failed to launch uhreval CLI: ${result.error.message}`);
  }
  if (result.status !== 0) {
    throw new Error(`uhreval ${args.join(" ")} exited ${result.status}: ${result.stderr.trim()}`);
  }
  return result.stdout;
}

/** Run one kernel request through the core CLI and parse its JSON reply. */
export function runKernel(name: string, request: unknown): Record<string, unknown> {
  return JSON.parse(runCli(["kernel", name], JSON.stringify(request)));
}

/** Version string reported by the installed core CLI. */
export function coreVersion(): string {
  return runCli(["--version"]).trim().replace(/^uhreval\s+/, "");
}

function expectLength(name: string, actual: number, expected: number): void {
  if (actual !== expected) {
    throw new RangeError(`${name} has ${actual} elements, expected ${expected}`);
  }
}

function expectDims(dims: TensorDims): void {
  for (const [key, value] of Object.entries(dims)) {
    if (!Number.isInteger(value) || value < 1) {
      throw new RangeError(`${key} must be a positive integer, got ${value}`);
    }
  }
}

function toF64(name: string, data: Float64Array, dims: TensorDims): number[] {
  if (!(data instanceof Float64Array)) {
    throw new TypeError(`${name} must be a Float64Array`);
  }
  expectDims(dims);
  expectLength(name, data.length, dims.channels * dims.height * dims.width);
  return Array.from(data);
}

/**
 * Mean normalized co-occurrence entropy of an 8-bit grayscale image over
 * all full patches; 0 for a constant image, at most 1.
 */
export function glcmScore(
  gray: Uint8Array,
  width: number,
  height: number,
  patchSide = 64,
  levels = 64,
): number {
  if (!(gray instanceof Uint8Array)) {
    throw new TypeError("gray must be a Uint8Array");
  }
  expectLength("gray", gray.length, width * height);
  const rows: number[][] = [];
  for (let r = 0; r < height; r += 1) {
    rows.push(Array.from(gray.subarray(r * width, (r + 1) * width)));
  }
  const reply = runKernel("glcm-score", { data: rows, patch_side: patchSide, levels });
  return reply.glcm_score as number;
}

/**
 * Raw size (3 * width * height bytes) divided by the deterministic
 * baseline-JPEG encoded size; lower means richer fine detail.
 */
export function compressionRatio(
  rgb: Uint8Array,
  width: number,
  height: number,
  options: CompressionOptions = {},
): number {
  if (!(rgb instanceof Uint8Array)) {
    throw new TypeError("rgb must be a Uint8Array");
  }
  expectLength("rgb", rgb.length, 3 * width * height);
  const reply = runKernel("compression-ratio", {
    width,
    height,
    rgb: Array.from(rgb),
    quality: options.quality ?? 95,
    subsampling: options.subsampling ?? "4:4:4",
  });
  return reply.compression_ratio as number;
}

/** Single-level orthonormal Haar decomposition of a (C, H, W) tensor. */
export function dwt(data: Float64Array, dims: TensorDims): SubbandSet {
  const reply = runKernel("dwt", { ...dims, data: toF64("data", data, dims) });
  const half: TensorDims = {
    channels: reply.channels as number,
    height: reply.height as number,
    width: reply.width as number,
  };
  return {
    ...half,
    ll: Float64Array.from(reply.ll as number[]),
    lh: Float64Array.from(reply.lh as number[]),
    hl: Float64Array.from(reply.hl as number[]),
    hh: Float64Array.from(reply.hh as number[]),
  };
}

/** Inverse of `dwt`; returns the reconstructed (C, 2H, 2W) tensor. */
export function idwt(bands: SubbandSet): Float64Array {
  const dims = { channels: bands.channels, height: bands.height, width: bands.width };
  const reply = runKernel("idwt", {
    ...dims,
    ll: toF64("ll", bands.ll, dims),
    lh: toF64("lh", bands.lh, dims),
    hl: toF64("hl", bands.hl, dims),
    hh: toF64("hh", bands.hh, dims),
  });
  return Float64Array.from(reply.data as number[]);
}

/**
 * Wavelet-domain velocity-matching loss. With uniform sub-band weights it
 * equals wT * mean((u - vHat)^2) up to float rounding.
 */
export function wlfLoss(
  vHat: Float64Array,
  u: Float64Array,
  dims: TensorDims,
  options: WlfOptions = {},
): number {
  const reply = runKernel("wlf-loss", {
    ...dims,
    v_hat: toF64("vHat", vHat, dims),
    u: toF64("u", u, dims),
    w_t: options.wT ?? 1.0,
    subband_weights: options.subbandWeights ?? [1, 1, 1, 1],
  });
  return reply.wlf_loss as number;
}
