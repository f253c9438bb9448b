/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_heatmap_free: (a: number, b: number) => void;
export const __wbg_layout_free: (a: number, b: number) => void;
export const __wbg_trackcomparison_free: (a: number, b: number) => void;
export const compareTracks: (a: number, b: number) => [number, number, number];
export const confidenceHeatmap: (a: number, b: number, c: number, d: number) => [number, number, number];
export const heatmap_error_mm: (a: number) => number;
export const heatmap_estimate: (a: number) => [number, number];
export const heatmap_nx: (a: number) => number;
export const heatmap_ny: (a: number) => number;
export const heatmap_values: (a: number) => [number, number];
export const hopSchedule: (a: number, b: number) => [number, number, number, number];
export const layout: () => number;
export const layout_antennas: (a: number) => [number, number];
export const layout_bounds: (a: number) => [number, number];
export const trackcomparison_eavesdropper: (a: number) => [number, number];
export const trackcomparison_eavesdropper_median_mm: (a: number) => number;
export const trackcomparison_legitimate: (a: number) => [number, number];
export const trackcomparison_legitimate_median_mm: (a: number) => number;
export const trackcomparison_truth: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
