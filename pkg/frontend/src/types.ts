// Wire contracts of the fusion service.

export type ModalityName = "speech" | "gesture" | "handwriting" | "sketch";

export interface WireToken {
    value: string;
    modality: ModalityName;
    t_start: number;
    t_end: number;
    target_id: string | null;
    source_id: string;
}

export interface Frame {
    action: string;
    object: string | null;
    target_id: string | null;
    params: Record<string, unknown>;
}

export interface TreeNode {
    symbol: string;
    production_id: string | null;
    attrs: Record<string, unknown>;
    children?: TreeNode[];
    token?: WireToken;
}

export interface CoverSpan {
    start: number;
    end: number;
    symbol: string | null;
    value: string | null;
}

export interface ParsedResponse {
    status: "parsed";
    tree: TreeNode;
    frame: Frame;
}

export interface NotParseableResponse {
    status: "not_parseable";
    session_id: string;
    state: string;
    unknowns: string[];
    spans: CoverSpan[];
    delta?: string;
}

export type ParseResponse = ParsedResponse | NotParseableResponse;

export interface SessionSnapshot {
    session_id: string;
    state: string;
    unknowns: string[];
    delta?: string;
}

export interface MeaningForm {
    action: string;
    object: string | null;
    target_id: string | null;
    params: Record<string, unknown>;
}

export const SYNTACTIC_ROLES = [
    "noun",
    "verb",
    "deictic",
    "preposition",
    "adjective",
    "conjunction",
    "determiner",
    "noun_phrase",
    "verb_phrase",
] as const;

export type RoleName = (typeof SYNTACTIC_ROLES)[number];
