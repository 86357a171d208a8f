/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const chain_sample: (a: number, b: number, c: number) => [number, number, number, number];
export const defect_heatmap: (a: number) => [number, number, number, number];
export const levels_table: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
