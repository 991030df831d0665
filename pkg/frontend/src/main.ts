import { App } from "./app.js";

const DEFAULT_API = "http://127.0.0.1:8765";

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  if (fromQuery) {
    window.localStorage.setItem("provlog.api", fromQuery);
    return fromQuery;
  }
  return window.localStorage.getItem("provlog.api") ?? DEFAULT_API;
}

const root = document.getElementById("app");
if (root) {
  const app = new App(root, apiBase());
  app.start().catch((err) => {
    const note = document.createElement("p");
    note.className = "connect-error";
    note.textContent =
      `cannot reach the explorer API at ${app.api.baseUrl} - ` +
      `start one with: provlog program.dl --serve 8765 (${err})`;
    root.appendChild(note);
  });
}
