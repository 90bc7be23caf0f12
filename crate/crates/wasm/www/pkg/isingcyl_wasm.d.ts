/* tslint:disable */
/* eslint-disable */

/**
 * Convergence ladder with `M = N = 2^k`:
 * `[N, log_mgf, residual, mean_ratio, var_ratio]` rows.
 */
export function cltResiduals(t: number, log2_min: number, log2_max: number): Float64Array;

export function criticalBeta(): number;

/**
 * Exact energy histogram of a `2N x 2M` cylinder: `[energy, count]` pairs.
 */
export function energyHistogram(n: number, m: number): Float64Array;

/**
 * Angle-local quantities over the grid: `[theta, gamma, g, f]` rows.
 */
export function spectrumCurves(beta: number, n: number, m: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly cltResiduals: (a: number, b: number, c: number) => [number, number, number, number];
    readonly criticalBeta: () => number;
    readonly energyHistogram: (a: number, b: number) => [number, number, number, number];
    readonly spectrumCurves: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
