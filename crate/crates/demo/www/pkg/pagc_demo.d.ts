/* tslint:disable */
/* eslint-disable */

/**
 * Condition names accepted by `simulate`.
 */
export function conditions(): string;

/**
 * One noisy 8-neighbour observation at (col, row).
 */
export function observe(world_seed: number, col: number, row: number, perturbed: boolean, seed: number): string;

/**
 * Pretrains a small backbone, then runs about `episodes` stage-2 episodes (rounded up to three equal blocks) of
 * `condition`. Returns per-episode α, ‖g‖ and prediction error.
 */
export function simulate(condition: string, seed: number, episodes: number): string;

/**
 * Mean field (row-major) and per-column noise std of the stage-2 world.
 */
export function world(world_seed: number, perturbed: boolean): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly conditions: () => [number, number];
    readonly observe: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly simulate: (a: number, b: number, c: number, d: number) => [number, number];
    readonly world: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
