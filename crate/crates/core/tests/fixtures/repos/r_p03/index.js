const express = require('express');
const util = require('./util');
const app = express();
