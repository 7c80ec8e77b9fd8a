/* tslint:disable */
/* eslint-disable */

/**
 * Noisy observations `Y_j = a j/N + noise_j` together with the drift estimate.
 */
export class Sample {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly a_hat: number;
    /**
     * Pathwise error bound; NaN for fBm.
     */
    readonly envelope: number;
    readonly noise: Float64Array;
    readonly observations: Float64Array;
    readonly times: Float64Array;
}

/**
 * Exact fBm mean squared error `N^(2-2H) / (x^T m^-1 x)`.
 */
export function fbmMse(h: number, n: number, alpha: number): number;

/**
 * fBm path with drift `a` and its maximum-likelihood drift estimate.
 */
export function simulateFbm(h: number, n: number, alpha: number, a: number, seed: number): Sample;

/**
 * Rosenblatt-walk path with drift `a` and its pseudo-likelihood drift estimate.
 */
export function simulateRosenblatt(h: number, n: number, alpha: number, a: number, seed: number): Sample;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_sample_free: (a: number, b: number) => void;
    readonly fbmMse: (a: number, b: number, c: number) => [number, number, number];
    readonly sample_a_hat: (a: number) => number;
    readonly sample_envelope: (a: number) => number;
    readonly sample_noise: (a: number) => [number, number];
    readonly sample_observations: (a: number) => [number, number];
    readonly sample_times: (a: number) => [number, number];
    readonly simulateFbm: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly simulateRosenblatt: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
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
