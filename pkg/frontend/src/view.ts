import type { CoverSpan, Frame, TreeNode } from "./types";

const escapeHtml = (s: string) =>
    s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

export function frameCard(frame: Frame): string {
    const params = Object.entries(frame.params ?? {});
    return `
    <div class="frame-card" data-role="frame-card">
      <div class="frame-row"><span>action</span><b data-role="frame-action">${escapeHtml(frame.action)}</b></div>
      <div class="frame-row"><span>object</span><b data-role="frame-object">${escapeHtml(frame.object ?? "—")}</b></div>
      <div class="frame-row"><span>target</span><b data-role="frame-target">${escapeHtml(frame.target_id ?? "—")}</b></div>
      <div class="frame-row"><span>params</span><b data-role="frame-params">${
          params.length ? escapeHtml(params.map(([k, v]) => `${k}=${v}`).join(", ")) : "—"
      }</b></div>
    </div>`;
}

function attrLine(attrs: Record<string, unknown>): string {
    const parts: string[] = [];
    for (const key of ["val", "mod", "synrole", "coop"]) {
        if (key in attrs) {
            const value = attrs[key];
            parts.push(`${key}=${Array.isArray(value) ? value.join("+") : value}`);
        }
    }
    return parts.join("  ");
}

export function treeText(node: TreeNode, indent = 0): string {
    const pad = "  ".repeat(indent);
    const pid = node.production_id ? ` [${node.production_id}]` : "";
    let line = `${pad}${node.symbol}${pid}  ${attrLine(node.attrs)}`;
    for (const child of node.children ?? []) {
        line += "\n" + treeText(child, indent + 1);
    }
    return line;
}

export function spanList(spans: CoverSpan[]): string {
    const items = spans
        .map((s) => {
            const label = s.symbol ?? `unknown “${s.value}”`;
            const cls = s.symbol ? "span-known" : "span-unknown";
            return `<li class="${cls}">${s.start}–${s.end}: ${escapeHtml(label)}</li>`;
        })
        .join("");
    return `<ul class="span-list" data-role="span-list">${items}</ul>`;
}
