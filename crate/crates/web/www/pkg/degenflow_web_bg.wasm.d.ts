/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const extremal_curve: (a: number, b: number) => [number, number, number, number];
export const gpe_run: (a: number, b: number) => [number, number, number, number];
export const mu_scaling: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const solver_tolerance: () => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
