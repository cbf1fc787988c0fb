import { ServiceClient } from "./api";
import { TeachConsole } from "./app";

const params = new URLSearchParams(window.location.search);
const baseUrl =
    params.get("service") ??
    window.localStorage.getItem("magfuse.service") ??
    "http://127.0.0.1:8077";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

new TeachConsole(document, new ServiceClient(baseUrl)).mount(root);

const health = document.getElementById("health");
new ServiceClient(baseUrl)
    .health()
    .then((h) => {
        if (health) health.textContent = `service ok · ${h.productions} productions`;
    })
    .catch(() => {
        if (health) health.textContent = `service unreachable at ${baseUrl}`;
    });
