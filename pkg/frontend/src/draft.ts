import type { WireToken } from "./types";

/** One clickable icon of the gesture panel: clicking emits a gesture token
 * carrying the icon's concept and on-screen target. */
export interface GesturePanelItem {
    icon: string;
    label: string;
    targetId: string;
    concept: string;
}

export const GESTURE_PANEL: GesturePanelItem[] = [
    { icon: "🌡", label: "Climate", targetId: "hvac_icon", concept: "temperature" },
    { icon: "🎵", label: "Track 7", targetId: "track_7", concept: "song" },
    { icon: "📻", label: "Station 5", targetId: "station_5", concept: "station" },
    { icon: "🔦", label: "Headlight", targetId: "headlight_icon", concept: "headlight" },
    { icon: "🔊", label: "Volume", targetId: "volume_icon", concept: "speaker_volume" },
    { icon: "📖", label: "Contacts", targetId: "phonebook_icon", concept: "phone-book" },
];

export interface PanelClick {
    item: GesturePanelItem;
    atMs: number;
    wordsAtClick: number;
}

/** What the user has composed so far: typed text with per-word keystroke
 * times when we saw them, plus timestamped panel clicks. */
export interface UtteranceDraft {
    text: string;
    wordTimesMs: number[];
    clicks: PanelClick[];
}

export function emptyDraft(): UtteranceDraft {
    return { text: "", wordTimesMs: [], clicks: [] };
}

export function draftWords(draft: UtteranceDraft): string[] {
    return draft.text.trim().split(/\s+/).filter((w) => w.length > 0);
}

export function canSend(draft: UtteranceDraft): boolean {
    return draftWords(draft).length > 0 || draft.clicks.length > 0;
}

const WORD_SLOT_MS = 300;
const WORD_FILL_MS = 280;
const CLICK_FILL_MS = 150;

function hasCadence(draft: UtteranceDraft, wordCount: number): boolean {
    if (draft.wordTimesMs.length !== wordCount || wordCount === 0) return false;
    for (let i = 1; i < wordCount; i++) {
        if (draft.wordTimesMs[i] <= draft.wordTimesMs[i - 1]) return false;
    }
    return true;
}

/** Convert the draft to token streams for POST /parse.
 *
 * Words keep their captured keystroke cadence when every word has a distinct
 * timestamp; otherwise they take uniform 300 ms slots. Clicks use their real
 * offsets on the cadence clock, or, without cadence, land right after the
 * words that were already typed when the click happened, so deictic words and
 * gestures stay inside the fusion window exactly as they did live.
 */
export function toStreams(draft: UtteranceDraft): WireToken[][] {
    const words = draftWords(draft);
    const speech: WireToken[] = [];
    const gestures: WireToken[] = [];
    const cadence = hasCadence(draft, words.length);

    if (cadence) {
        const base = Math.min(draft.wordTimesMs[0], ...draft.clicks.map((c) => c.atMs));
        words.forEach((value, i) => {
            const start = Math.round(draft.wordTimesMs[i] - base);
            speech.push(speechToken(value, start, start + WORD_FILL_MS));
        });
        for (const click of draft.clicks) {
            const start = Math.max(0, Math.round(click.atMs - base));
            gestures.push(gestureToken(click, start));
        }
    } else {
        words.forEach((value, i) => {
            const start = i * WORD_SLOT_MS;
            speech.push(speechToken(value, start, start + WORD_FILL_MS));
        });
        for (const click of draft.clicks) {
            const start =
                click.wordsAtClick > 0
                    ? (click.wordsAtClick - 1) * WORD_SLOT_MS + CLICK_FILL_MS
                    : 0;
            gestures.push(gestureToken(click, start));
        }
    }

    const streams: WireToken[][] = [];
    if (speech.length > 0) streams.push(speech);
    if (gestures.length > 0) streams.push(gestures);
    return streams;
}

function speechToken(value: string, t_start: number, t_end: number): WireToken {
    return {
        value: value.toLowerCase(),
        modality: "speech",
        t_start,
        t_end,
        target_id: null,
        source_id: "typed",
    };
}

function gestureToken(click: PanelClick, start: number): WireToken {
    return {
        value: click.item.concept,
        modality: "gesture",
        t_start: start,
        t_end: start + CLICK_FILL_MS,
        target_id: click.item.targetId,
        source_id: "panel",
    };
}
