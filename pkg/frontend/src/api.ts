import type {
    MeaningForm,
    ParseResponse,
    RoleName,
    SessionSnapshot,
    WireToken,
} from "./types";

export class ServiceError extends Error {
    constructor(
        readonly status: number,
        message: string,
        readonly body: Record<string, unknown> = {},
    ) {
        super(message);
    }
}

/** Thin typed client over the service HTTP endpoints; the console keeps no
 * grammar state of its own, every view comes from these responses. */
export class ServiceClient {
    constructor(readonly baseUrl: string) {}

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        let response: Response;
        try {
            response = await fetch(this.baseUrl + path, {
                method,
                headers: body === undefined ? {} : { "content-type": "application/json" },
                body: body === undefined ? undefined : JSON.stringify(body),
            });
        } catch (err) {
            throw new ServiceError(0, `service unreachable at ${this.baseUrl}: ${err}`);
        }
        const text = await response.text();
        let parsed: Record<string, unknown> = {};
        try {
            parsed = text ? JSON.parse(text) : {};
        } catch {
            parsed = { raw: text };
        }
        if (!response.ok) {
            const message =
                typeof parsed.error === "string" ? parsed.error : `HTTP ${response.status}`;
            throw new ServiceError(response.status, message, parsed);
        }
        return parsed as T;
    }

    health(): Promise<{ status: string; productions: number }> {
        return this.request("GET", "/health");
    }

    parse(streams: WireToken[][]): Promise<ParseResponse> {
        return this.request("POST", "/parse", { streams });
    }

    sendRoles(sessionId: string, roles: Record<string, RoleName>): Promise<SessionSnapshot> {
        return this.request("POST", `/teach/${sessionId}/roles`, { roles });
    }

    sendMeaning(sessionId: string, meaning: MeaningForm): Promise<SessionSnapshot> {
        return this.request("POST", `/teach/${sessionId}/meaning`, meaning);
    }

    confirm(sessionId: string, verdict: "confirm" | "reject"): Promise<SessionSnapshot> {
        return this.request("POST", `/teach/${sessionId}/confirm`, { verdict });
    }

    async grammarText(): Promise<string> {
        const response = await fetch(this.baseUrl + "/grammar");
        return response.text();
    }
}
