/* tslint:disable */
/* eslint-disable */

/**
 * Detector crossover `min(1/2, eps_d(a))` for `d = 0..=max_depth` and no interference.
 */
export function epsilon_curves(max_depth: number, a_min: number, a_max: number, points: number): string;

/**
 * Capacity region of an erasure pair `{"user1": {"q", "pmf"}, "user2": ..}`.
 */
export function erasure_region(pair: string): string;

/**
 * Outer bound and threshold-assignment inner bound of a fading pair.
 */
export function gaussian_curves(pair: string, stripping: boolean, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly epsilon_curves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly erasure_region: (a: number, b: number) => [number, number, number, number];
    readonly gaussian_curves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
