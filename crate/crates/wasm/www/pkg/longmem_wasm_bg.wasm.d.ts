/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_sample_free: (a: number, b: number) => void;
export const fbmMse: (a: number, b: number, c: number) => [number, number, number];
export const sample_a_hat: (a: number) => number;
export const sample_envelope: (a: number) => number;
export const sample_noise: (a: number) => [number, number];
export const sample_observations: (a: number) => [number, number];
export const sample_times: (a: number) => [number, number];
export const simulateFbm: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const simulateRosenblatt: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
