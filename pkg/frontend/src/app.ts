import { ServiceClient, ServiceError } from "./api";
import {
    GESTURE_PANEL,
    UtteranceDraft,
    canSend,
    draftWords,
    emptyDraft,
    toStreams,
} from "./draft";
import type {
    MeaningForm,
    NotParseableResponse,
    ParsedResponse,
    RoleName,
} from "./types";
import { SYNTACTIC_ROLES } from "./types";
import { frameCard, spanList, treeText } from "./view";

const LAYOUT = `
  <div class="banner" data-role="banner" hidden></div>
  <section class="composer">
    <label>speech (typed)
      <input type="text" data-role="speech-input" placeholder="turn on this …" autocomplete="off">
    </label>
    <div class="gesture-panel" data-role="gesture-panel"></div>
    <div class="draft-timeline" data-role="timeline"></div>
    <button data-role="send" disabled>send utterance</button>
    <button data-role="clear">clear draft</button>
  </section>
  <section class="result" data-role="result"></section>
  <section class="wizard" data-role="wizard" hidden></section>
  <div class="toast" data-role="toast" hidden></div>
`;

interface WizardState {
    sessionId: string;
    unknowns: string[];
    step: 1 | 2 | 3;
    roles: Record<string, RoleName>;
    delta?: string;
    notice?: string;
}

/** The teach console. All state that matters lives on the service; this class
 * only holds the current draft and the open wizard step, so a refresh or a
 * restart never disagrees with the grammar. */
export class TeachConsole {
    private draft: UtteranceDraft = emptyDraft();
    private draftStartedAt: number | null = null;
    private wizard: WizardState | null = null;
    private root!: HTMLElement;
    private busy: Promise<void> = Promise.resolve();

    constructor(
        private readonly doc: Document,
        private readonly client: ServiceClient,
        private readonly now: () => number = () =>
            (globalThis.performance ?? { now: () => Date.now() }).now(),
    ) {}

    mount(root: HTMLElement): void {
        this.root = root;
        root.innerHTML = LAYOUT;
        const panel = this.q("gesture-panel");
        for (const item of GESTURE_PANEL) {
            const button = this.doc.createElement("button");
            button.className = "gesture-icon";
            button.dataset.targetId = item.targetId;
            button.textContent = `${item.icon} ${item.label}`;
            button.addEventListener("click", () => this.recordClick(item.targetId));
            panel.appendChild(button);
        }
        this.input().addEventListener("input", () => this.recordTyping());
        this.q("send").addEventListener("click", () => this.enqueue(() => this.send()));
        this.q("clear").addEventListener("click", () => this.resetDraft());
        this.renderDraft();
    }

    /** Resolves when every handler kicked off so far has settled (tests). */
    whenIdle(): Promise<void> {
        return this.busy;
    }

    private enqueue(op: () => Promise<void>): void {
        this.busy = this.busy.then(op).catch((err) => this.showBanner(String(err)));
    }

    private q<T extends HTMLElement = HTMLElement>(role: string): T {
        const el = this.root.querySelector<T>(`[data-role="${role}"]`);
        if (!el) throw new Error(`missing element ${role}`);
        return el;
    }

    private input(): HTMLInputElement {
        return this.q<HTMLInputElement>("speech-input");
    }

    // --- draft capture -------------------------------------------------------

    private elapsed(): number {
        if (this.draftStartedAt === null) this.draftStartedAt = this.now();
        return this.now() - this.draftStartedAt;
    }

    private recordTyping(): void {
        const t = this.elapsed();
        this.draft.text = this.input().value;
        const count = draftWords(this.draft).length;
        while (this.draft.wordTimesMs.length < count) {
            this.draft.wordTimesMs.push(t);
        }
        this.draft.wordTimesMs.length = count;
        this.renderDraft();
    }

    private recordClick(targetId: string): void {
        const item = GESTURE_PANEL.find((i) => i.targetId === targetId);
        if (!item) return;
        this.draft.clicks.push({
            item,
            atMs: this.elapsed(),
            wordsAtClick: draftWords(this.draft).length,
        });
        this.renderDraft();
    }

    private resetDraft(): void {
        this.draft = emptyDraft();
        this.draftStartedAt = null;
        this.input().value = "";
        this.renderDraft();
    }

    private renderDraft(): void {
        const words = draftWords(this.draft)
            .map((w) => `<span class="chip chip-speech">${w}</span>`)
            .join("");
        const clicks = this.draft.clicks
            .map((c) => `<span class="chip chip-gesture">☛ ${c.item.concept}</span>`)
            .join("");
        this.q("timeline").innerHTML = words + clicks;
        (this.q("send") as HTMLButtonElement).disabled = !canSend(this.draft);
    }

    // --- parse / result -------------------------------------------------------------

    private async send(): Promise<void> {
        this.hideBanner();
        this.q("toast").hidden = true;
        let response;
        try {
            response = await this.client.parse(toStreams(this.draft));
        } catch (err) {
            // the draft stays; the user can retry once the service is back
            this.showBanner(
                err instanceof ServiceError && err.status === 0
                    ? err.message
                    : `parse failed: ${err instanceof Error ? err.message : err}`,
            );
            return;
        }
        if (response.status === "parsed") {
            this.wizard = null;
            this.q("wizard").hidden = true;
            this.renderParsed(response);
        } else {
            this.q("result").innerHTML = "";
            this.openWizard(response);
        }
    }

    private renderParsed(response: ParsedResponse): void {
        this.q("result").innerHTML = `
          <h2>command frame</h2>
          ${frameCard(response.frame)}
          <h2>parse tree</h2>
          <pre data-role="tree">${treeText(response.tree)}</pre>`;
    }

    // --- teach wizard ------------------------------------------------------------------

    private openWizard(response: NotParseableResponse, notice?: string): void {
        this.wizard = {
            sessionId: response.session_id,
            unknowns: response.unknowns,
            step: 1,
            roles: {},
            notice,
        };
        this.q("result").innerHTML = `
          <h2>not parseable</h2>
          <p>the grammar cannot derive this sentence yet.</p>
          ${spanList(response.spans)}`;
        this.renderWizard();
    }

    private renderWizard(): void {
        const wizard = this.q("wizard");
        if (!this.wizard) {
            wizard.hidden = true;
            return;
        }
        wizard.hidden = false;
        const { step, unknowns, notice } = this.wizard;
        const head = `
          <div class="wizard-steps" data-role="wizard-step">step ${step} of 3</div>
          ${notice ? `<div class="wizard-notice" data-role="wizard-notice">${notice}</div>` : ""}`;
        if (step === 1) {
            const rows = unknowns
                .map(
                    (token) => `
              <label class="role-row">“${token}” is a
                <select data-role="role-pick" data-token="${token}">
                  ${SYNTACTIC_ROLES.map((r) => `<option value="${r}">${r}</option>`).join("")}
                </select>
              </label>`,
                )
                .join("");
            wizard.innerHTML = `${head}
              <h3>1 · syntactic roles</h3>
              ${rows || "<p>no unknown tokens; continue.</p>"}
              <button data-role="wizard-roles-next">continue</button>`;
            this.q("wizard-roles-next").addEventListener("click", () =>
                this.enqueue(() => this.submitRoles()),
            );
        } else if (step === 2) {
            wizard.innerHTML = `${head}
              <h3>2 · meaning</h3>
              <label>action <input data-role="meaning-action" placeholder="set"></label>
              <label>object <input data-role="meaning-object" placeholder="speaker_volume"></label>
              <label>value <input data-role="meaning-value" placeholder="<num> binds spoken numbers"></label>
              <button data-role="wizard-meaning-next">propose rules</button>`;
            this.q("wizard-meaning-next").addEventListener("click", () =>
                this.enqueue(() => this.submitMeaning()),
            );
        } else {
            wizard.innerHTML = `${head}
              <h3>3 · proposed rules</h3>
              <pre data-role="delta">${this.wizard.delta ?? ""}</pre>
              <button data-role="wizard-confirm">confirm</button>
              <button data-role="wizard-reject">reject</button>`;
            this.q("wizard-confirm").addEventListener("click", () =>
                this.enqueue(() => this.finish("confirm")),
            );
            this.q("wizard-reject").addEventListener("click", () =>
                this.enqueue(() => this.finish("reject")),
            );
        }
    }

    private async submitRoles(): Promise<void> {
        if (!this.wizard) return;
        const roles: Record<string, RoleName> = {};
        this.root
            .querySelectorAll<HTMLSelectElement>('[data-role="role-pick"]')
            .forEach((select) => {
                roles[select.dataset.token as string] = select.value as RoleName;
            });
        this.wizard.roles = roles;
        await this.client.sendRoles(this.wizard.sessionId, roles);
        this.wizard.step = 2;
        this.renderWizard();
    }

    private async submitMeaning(): Promise<void> {
        if (!this.wizard) return;
        const action = this.q<HTMLInputElement>("meaning-action").value.trim();
        const object = this.q<HTMLInputElement>("meaning-object").value.trim();
        const value = this.q<HTMLInputElement>("meaning-value").value.trim();
        const meaning: MeaningForm = {
            action,
            object: object || null,
            target_id: null,
            params: value ? { value } : {},
        };
        try {
            const snapshot = await this.client.sendMeaning(this.wizard.sessionId, meaning);
            this.wizard.delta = snapshot.delta ?? "";
            this.wizard.step = 3;
            this.renderWizard();
        } catch (err) {
            if (err instanceof ServiceError) {
                this.showBanner(err.message);
                return;
            }
            throw err;
        }
    }

    private async finish(verdict: "confirm" | "reject"): Promise<void> {
        if (!this.wizard) return;
        try {
            const snapshot = await this.client.confirm(this.wizard.sessionId, verdict);
            this.wizard = null;
            this.renderWizard();
            const toast = this.q("toast");
            toast.hidden = false;
            toast.textContent =
                snapshot.state === "committed"
                    ? "rules committed — send the utterance again"
                    : "rejected; the grammar is unchanged";
        } catch (err) {
            // a concurrent commit invalidated the proposal: restart at step 1
            if (err instanceof ServiceError && err.status === 409) {
                await this.restartWizard(
                    "the grammar changed while you were teaching; roles are needed again",
                );
                return;
            }
            throw err;
        }
    }

    private async restartWizard(notice: string): Promise<void> {
        const response = await this.client.parse(toStreams(this.draft));
        if (response.status === "parsed") {
            this.wizard = null;
            this.renderWizard();
            this.renderParsed(response);
            return;
        }
        this.openWizard(response, notice);
    }

    // --- banner ------------------------------------------------------------------------

    private showBanner(message: string): void {
        const banner = this.q("banner");
        banner.hidden = false;
        banner.textContent = message;
    }

    private hideBanner(): void {
        this.q("banner").hidden = true;
    }
}
