/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Overlay SVG of the ROC (`kind = "roc"`) or PR curves of the listed
     * algorithms (comma-separated; empty for all).
     */
    curves_svg(kind: string, algorithms: string): string;
    /**
     * Held-out test comments, for picking an example.
     */
    examples(n: number): string;
    /**
     * LIME explanation JSON with an `html` rendering attached.
     */
    explain(algorithm: string, text: string, n_samples: number, seed: bigint): string;
    /**
     * Trains all seven classifiers on a 60/20/20 split of `n_docs`
     * synthetic comments, a `label_noise` fraction of which get their label
     * flipped (the clean corpus is perfectly separable).
     */
    constructor(n_docs: number, seed: bigint, label_noise: number);
    /**
     * Per-model test metrics as JSON.
     */
    summary(): string;
}

/**
 * Each preprocessing stage applied to `text`, as JSON.
 */
export function preprocess_view(text: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_curves_svg: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly demo_examples: (a: number, b: number) => [number, number];
    readonly demo_explain: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number, number];
    readonly demo_new: (a: number, b: bigint, c: number) => [number, number, number];
    readonly demo_summary: (a: number) => [number, number];
    readonly preprocess_view: (a: number, b: number) => [number, number];
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
