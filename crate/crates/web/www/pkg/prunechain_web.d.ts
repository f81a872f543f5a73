/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    length(): bigint;
    /**
     * Queues a login for `user`; returns the rendered entry.
     */
    login(user: string): string;
    marker(): bigint;
    constructor();
    /**
     * One line per live block.
     */
    render(): string;
    /**
     * Queues `user`'s request to delete the entry at `target`, e.g. `"3.1"`.
     */
    request_deletion(user: string, target: string): string;
    /**
     * Advances the clock by one; returns the outcome as JSON.
     */
    tick(): string;
    valid(): boolean;
    waiting(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_length: (a: number) => bigint;
    readonly demo_login: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_marker: (a: number) => bigint;
    readonly demo_new: () => number;
    readonly demo_render: (a: number) => [number, number];
    readonly demo_request_deletion: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly demo_tick: (a: number) => [number, number, number, number];
    readonly demo_valid: (a: number) => number;
    readonly demo_waiting: (a: number) => number;
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
