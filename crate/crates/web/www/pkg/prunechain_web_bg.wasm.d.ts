/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_length: (a: number) => bigint;
export const demo_login: (a: number, b: number, c: number) => [number, number, number, number];
export const demo_marker: (a: number) => bigint;
export const demo_new: () => number;
export const demo_render: (a: number) => [number, number];
export const demo_request_deletion: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const demo_tick: (a: number) => [number, number, number, number];
export const demo_valid: (a: number) => number;
export const demo_waiting: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
