import { ApiClient } from "./api.js";
import { bootstrap } from "./app.js";

// ?api=http://host:port points the client at a service on another origin;
// without it the page assumes it is served next to the API.
const base = new URLSearchParams(window.location.search).get("api") ?? "";
const root = document.getElementById("app");
if (root) bootstrap(root, new ApiClient(base));
