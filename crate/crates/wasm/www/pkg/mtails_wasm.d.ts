/* tslint:disable */
/* eslint-disable */

/**
 * Bernstein deviation and probability as `t` varies.
 */
export function bernstein_curve(n: number, b: number, sigma2: number, k: number, t_max: number, points: number): string;

/**
 * Observed relative error of the sampled product against both certificates.
 */
export function rmm_experiment(rows: number, m: number, decay: number, n_max: number, runs: number, seed: number): string;

/**
 * `phi(t)`, `e^(-t/2)` and `e^(-t)` on a grid.
 */
export function tail_curve(t_min: number, t_max: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bernstein_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly rmm_experiment: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly tail_curve: (a: number, b: number, c: number) => [number, number, number, number];
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
