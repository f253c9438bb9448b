/* tslint:disable */
/* eslint-disable */

/**
 * Confidence over the workspace grid plus the resulting estimate.
 */
export class HeatMap {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly error_mm: number;
    readonly estimate: Float64Array;
    readonly nx: number;
    readonly ny: number;
    /**
     * Confidence per node, x-major (`values[i * ny + j]`).
     */
    readonly values: Float64Array;
}

/**
 * Geometry for drawing: workspace bounds then antenna coordinates.
 */
export class Layout {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Interleaved `x, y` per antenna.
     */
    readonly antennas: Float64Array;
    /**
     * `[x_min, x_max, y_min, y_max]`, metres.
     */
    readonly bounds: Float64Array;
}

/**
 * True, legitimately tracked and eavesdropped paths of one gesture.
 */
export class TrackComparison {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly eavesdropper: Float64Array;
    readonly eavesdropper_median_mm: number;
    readonly legitimate: Float64Array;
    readonly legitimate_median_mm: number;
    /**
     * Interleaved `x, y` per tick.
     */
    readonly truth: Float64Array;
}

export function compareTracks(seed: number, phase_noise: number): TrackComparison;

export function confidenceHeatmap(x: number, y: number, phase_noise: number, seed: number): HeatMap;

export function hopSchedule(deployment_seed: number, slots: number): Uint32Array;

export function layout(): Layout;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_heatmap_free: (a: number, b: number) => void;
    readonly __wbg_layout_free: (a: number, b: number) => void;
    readonly __wbg_trackcomparison_free: (a: number, b: number) => void;
    readonly compareTracks: (a: number, b: number) => [number, number, number];
    readonly confidenceHeatmap: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly heatmap_error_mm: (a: number) => number;
    readonly heatmap_estimate: (a: number) => [number, number];
    readonly heatmap_nx: (a: number) => number;
    readonly heatmap_ny: (a: number) => number;
    readonly heatmap_values: (a: number) => [number, number];
    readonly hopSchedule: (a: number, b: number) => [number, number, number, number];
    readonly layout: () => number;
    readonly layout_antennas: (a: number) => [number, number];
    readonly layout_bounds: (a: number) => [number, number];
    readonly trackcomparison_eavesdropper: (a: number) => [number, number];
    readonly trackcomparison_eavesdropper_median_mm: (a: number) => number;
    readonly trackcomparison_legitimate: (a: number) => [number, number];
    readonly trackcomparison_legitimate_median_mm: (a: number) => number;
    readonly trackcomparison_truth: (a: number) => [number, number];
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
