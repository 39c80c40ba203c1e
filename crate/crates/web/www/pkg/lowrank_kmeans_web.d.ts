/* tslint:disable */
/* eslint-disable */

/**
 * Simulates a `p = 20` Gaussian mixture and clusters it with `method`
 * (`bm`, `km`, `nmf` or `spectral`).
 */
export function cluster_sample(n: number, k: number, gamma: number, seed: number, method: string): string;

/**
 * Per-outer-iteration relative membership error for each rank in `ranks`
 * (comma-separated) on one simulated sample.
 */
export function convergence_traces(n: number, k: number, gamma: number, seed: number, ranks: string): string;

/**
 * Sharp threshold `Θ̄²` on a geometric grid of `steps` sample sizes.
 */
export function threshold_curve(p: number, k: number, sigma: number, n_min: number, n_max: number, steps: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly cluster_sample: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly convergence_traces: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly threshold_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
