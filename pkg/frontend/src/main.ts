import { ApiClient } from "./api.js";
import { App } from "./render/app.js";
import { SelectionStore } from "./state.js";

const root = document.getElementById("app");
if (root) {
  void new App(root, new ApiClient(), new SelectionStore()).init();
}
